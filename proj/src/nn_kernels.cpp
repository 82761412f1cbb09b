#include "fpl/nn_kernels.hpp"

#include <cstring>

namespace fpl::nn {

void conv2d_forward(const double* x, int n, int c, int h, int w,
                    const double* wt, const double* bias, int f, int k,
                    double* y, bool parallel) {
    const int pad = k / 2;
    const long plane = static_cast<long>(h) * w;

#pragma omp parallel for collapse(2) schedule(static) if (parallel)
    for (int in = 0; in < n; ++in) {
        for (int of = 0; of < f; ++of) {
            const double* wf = wt + static_cast<long>(of) * c * k * k;
            double* yp = y + (static_cast<long>(in) * f + of) * plane;
            for (int oy = 0; oy < h; ++oy) {
                for (int ox = 0; ox < w; ++ox) {
                    double acc = bias[of];
                    for (int ic = 0; ic < c; ++ic) {
                        const double* xp = x + (static_cast<long>(in) * c + ic) * plane;
                        const double* wc = wf + static_cast<long>(ic) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy + ky - pad;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox + kx - pad;
                                if (ix < 0 || ix >= w) continue;
                                acc += wc[ky * k + kx] * xp[static_cast<long>(iy) * w + ix];
                            }
                        }
                    }
                    yp[static_cast<long>(oy) * w + ox] = acc;
                }
            }
        }
    }
}

void conv2d_backward(const double* x, const double* wt, const double* gy,
                     int n, int c, int h, int w, int f, int k,
                     double* gx, double* gw, double* gb, bool parallel) {
    const int pad = k / 2;
    const long plane = static_cast<long>(h) * w;

    if (gx) {
        // gx[n,ic,iy,ix] = sum_f sum_k gy[n,f,iy-ky+pad,ix-kx+pad] * w[f,ic,ky,kx]
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
        for (int in = 0; in < n; ++in) {
            for (int ic = 0; ic < c; ++ic) {
                double* gxp = gx + (static_cast<long>(in) * c + ic) * plane;
                for (int iy = 0; iy < h; ++iy) {
                    for (int ix = 0; ix < w; ++ix) {
                        double acc = 0;
                        for (int of = 0; of < f; ++of) {
                            const double* gyp = gy + (static_cast<long>(in) * f + of) * plane;
                            const double* wc = wt + (static_cast<long>(of) * c + ic) * k * k;
                            for (int ky = 0; ky < k; ++ky) {
                                const int oy = iy - ky + pad;
                                if (oy < 0 || oy >= h) continue;
                                for (int kx = 0; kx < k; ++kx) {
                                    const int ox = ix - kx + pad;
                                    if (ox < 0 || ox >= w) continue;
                                    acc += gyp[static_cast<long>(oy) * w + ox] * wc[ky * k + kx];
                                }
                            }
                        }
                        gxp[static_cast<long>(iy) * w + ix] = acc;
                    }
                }
            }
        }
    }

    if (gw) {
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
        for (int of = 0; of < f; ++of) {
            for (int ic = 0; ic < c; ++ic) {
                double* gwc = gw + (static_cast<long>(of) * c + ic) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        double acc = 0;
                        for (int in = 0; in < n; ++in) {
                            const double* gyp = gy + (static_cast<long>(in) * f + of) * plane;
                            const double* xp = x + (static_cast<long>(in) * c + ic) * plane;
                            for (int oy = 0; oy < h; ++oy) {
                                const int iy = oy + ky - pad;
                                if (iy < 0 || iy >= h) continue;
                                for (int ox = 0; ox < w; ++ox) {
                                    const int ix = ox + kx - pad;
                                    if (ix < 0 || ix >= w) continue;
                                    acc += gyp[static_cast<long>(oy) * w + ox] *
                                           xp[static_cast<long>(iy) * w + ix];
                                }
                            }
                        }
                        gwc[ky * k + kx] = acc;
                    }
                }
            }
        }
    }

    if (gb) {
#pragma omp parallel for schedule(static) if (parallel)
        for (int of = 0; of < f; ++of) {
            double acc = 0;
            for (int in = 0; in < n; ++in) {
                const double* gyp = gy + (static_cast<long>(in) * f + of) * plane;
                for (long i = 0; i < plane; ++i) acc += gyp[i];
            }
            gb[of] = acc;
        }
    }
}

void maxpool_forward(const double* x, int n, int c, int h, int w, int pool,
                     double* y, int* argmax, bool parallel) {
    const int oh = h / pool, ow = w / pool;
    const long in_plane = static_cast<long>(h) * w;
    const long out_plane = static_cast<long>(oh) * ow;

#pragma omp parallel for collapse(2) schedule(static) if (parallel)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const double* xp = x + (static_cast<long>(in) * c + ic) * in_plane;
            double* yp = y + (static_cast<long>(in) * c + ic) * out_plane;
            int* ap = argmax + (static_cast<long>(in) * c + ic) * out_plane;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    int best = (oy * pool) * w + ox * pool;
                    double bv = xp[best];
                    for (int py = 0; py < pool; ++py) {
                        for (int px = 0; px < pool; ++px) {
                            const int i = (oy * pool + py) * w + ox * pool + px;
                            if (xp[i] > bv) {
                                bv = xp[i];
                                best = i;
                            }
                        }
                    }
                    yp[static_cast<long>(oy) * ow + ox] = bv;
                    ap[static_cast<long>(oy) * ow + ox] = best;
                }
            }
        }
    }
}

void maxpool_backward(const double* gy, const int* argmax, int n, int c,
                      int h, int w, int pool, double* gx, bool parallel) {
    const int oh = h / pool, ow = w / pool;
    const long in_plane = static_cast<long>(h) * w;
    const long out_plane = static_cast<long>(oh) * ow;
    std::memset(gx, 0, sizeof(double) * static_cast<std::size_t>(n) * c * in_plane);

#pragma omp parallel for collapse(2) schedule(static) if (parallel)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const double* gyp = gy + (static_cast<long>(in) * c + ic) * out_plane;
            const int* ap = argmax + (static_cast<long>(in) * c + ic) * out_plane;
            double* gxp = gx + (static_cast<long>(in) * c + ic) * in_plane;
            for (long i = 0; i < out_plane; ++i) {
                gxp[ap[i]] += gyp[i];  // disjoint (in,ic) planes per thread
            }
        }
    }
}

}  // namespace fpl::nn
