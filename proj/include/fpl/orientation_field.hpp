#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fpl/gray_image.hpp"

namespace fpl {

struct GridParams {
    int sigma = 12;  // pixels per grid cell side; >= 4

    void validate() const;
};

// Per-grid-cell gradient summary for a whole image. Cells tile the image
// from pixel (1,1), leaving a one-pixel margin so every central difference
// is in bounds; cells that would overrun the image are dropped.
struct OrientationField {
    int cells_x = 0;
    int cells_y = 0;
    std::vector<double> unit_x;      // |gradient-x| share, in [0,1]
    std::vector<double> unit_y;      // |gradient-y| share, in [0,1]
    std::vector<double> magnitude;   // sqrt(dy^2 + dx^2) of the cell sums
    std::vector<std::int8_t> sign_y; // +1 upward-facing / -1 downward-facing

    std::size_t idx(int cell_row, int cell_col) const {
        return static_cast<std::size_t>(cell_row) * cells_x + cell_col;
    }
};

// rho[y][x+1] - rho[y][x-1]; throws when (x,y) has no central neighbor.
double central_diff_x(const GrayImage& img, int x, int y);
// rho[y+1][x] - rho[y-1][x]
double central_diff_y(const GrayImage& img, int x, int y);

struct CellSums {
    double dx_abs = 0;     // sum of |central_diff_x| over interior pixels
    double dy_abs = 0;     // sum of |central_diff_y|
    double dy_signed = 0;  // sum of raw central_diff_y
};

// Sums central differences over the cell's interior, i.e. the
// (sigma-2)x(sigma-2) pixels left after excluding the cell's 1-pixel
// border. The cell must sit fully inside the image with a 1-pixel margin.
// cell_row_px/cell_col_px are the cell's top-left corner in pixels.
CellSums cell_gradient_sums(const GrayImage& img, int cell_row_px,
                            int cell_col_px, const GridParams& params);

// Sum of dx*dy over the same interior pixels. Its sign tells whether the
// cell's gradient axis slopes downward-right (+) or upward-right (-),
// which stays stable on periodic ridge textures where the plain signed
// dy sum averages out to noise.
double cell_cross_sum(const GrayImage& img, int cell_row_px, int cell_col_px,
                      const GridParams& params);

double cell_magnitude(double dx_abs, double dy_abs);

OrientationField build_orientation_field(const GrayImage& img,
                                         const GridParams& params,
                                         bool parallel = true);
// Reference implementation, kept for testing the parallel path bit-for-bit.
OrientationField build_orientation_field_serial(const GrayImage& img,
                                                const GridParams& params);

// One line per cell row; tab-separated "ux,uy,sign,mag" per cell.
void write_field_dump(const OrientationField& field, std::ostream& out);

}  // namespace fpl
