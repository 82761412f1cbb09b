#pragma once

#include <cstddef>

namespace fpl::nn {

// Dense-loop kernels shared by the classifier. Each output element is
// reduced by exactly one thread in a fixed order, so results are
// bit-identical with `parallel` on or off.

// x: [n,c,h,w], w: [f,c,k,k], y: [n,f,h,w]; stride 1, zero padding k/2.
void conv2d_forward(const double* x, int n, int c, int h, int w,
                    const double* wt, const double* bias, int f, int k,
                    double* y, bool parallel);

// gy: [n,f,h,w]. Any of gx/gw/gb may be null to skip that output.
void conv2d_backward(const double* x, const double* wt, const double* gy,
                     int n, int c, int h, int w, int f, int k,
                     double* gx, double* gw, double* gb, bool parallel);

// 2D max pooling, window == stride == pool, floor semantics.
// argmax records the flat input offset that won each output cell.
void maxpool_forward(const double* x, int n, int c, int h, int w, int pool,
                     double* y, int* argmax, bool parallel);
void maxpool_backward(const double* gy, const int* argmax, int n, int c,
                      int h, int w, int pool, double* gx, bool parallel);

}  // namespace fpl::nn
