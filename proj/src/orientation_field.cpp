#include "fpl/orientation_field.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fpl {

void GridParams::validate() const {
    if (sigma < 4) {
        throw std::invalid_argument("sigma must be >= 4");
    }
}

double central_diff_x(const GrayImage& img, int x, int y) {
    if (x < 1 || x > img.width - 2 || y < 0 || y > img.height - 1) {
        throw std::out_of_range("central difference needs both x neighbors");
    }
    return static_cast<double>(img.at(y, x + 1)) - img.at(y, x - 1);
}

double central_diff_y(const GrayImage& img, int x, int y) {
    if (y < 1 || y > img.height - 2 || x < 0 || x > img.width - 1) {
        throw std::out_of_range("central difference needs both y neighbors");
    }
    return static_cast<double>(img.at(y + 1, x)) - img.at(y - 1, x);
}

namespace {

void check_cell_bounds(const GrayImage& img, int row_px, int col_px, int sigma) {
    // full cell inside the image with a one-pixel margin on all sides
    if (row_px < 1 || col_px < 1 || row_px + sigma > img.height - 1 ||
        col_px + sigma > img.width - 1) {
        throw std::out_of_range("grid cell out of bounds");
    }
}

}  // namespace

CellSums cell_gradient_sums(const GrayImage& img, int cell_row_px,
                            int cell_col_px, const GridParams& params) {
    params.validate();
    check_cell_bounds(img, cell_row_px, cell_col_px, params.sigma);

    CellSums sums;
    for (int y = cell_row_px + 1; y < cell_row_px + params.sigma - 1; ++y) {
        for (int x = cell_col_px + 1; x < cell_col_px + params.sigma - 1; ++x) {
            const double dx = static_cast<double>(img.at(y, x + 1)) - img.at(y, x - 1);
            const double dy = static_cast<double>(img.at(y + 1, x)) - img.at(y - 1, x);
            sums.dx_abs += std::abs(dx);
            sums.dy_abs += std::abs(dy);
            sums.dy_signed += dy;
        }
    }
    return sums;
}

double cell_cross_sum(const GrayImage& img, int cell_row_px, int cell_col_px,
                      const GridParams& params) {
    params.validate();
    check_cell_bounds(img, cell_row_px, cell_col_px, params.sigma);

    double cross = 0;
    for (int y = cell_row_px + 1; y < cell_row_px + params.sigma - 1; ++y) {
        for (int x = cell_col_px + 1; x < cell_col_px + params.sigma - 1; ++x) {
            const double dx = static_cast<double>(img.at(y, x + 1)) - img.at(y, x - 1);
            const double dy = static_cast<double>(img.at(y + 1, x)) - img.at(y - 1, x);
            cross += dx * dy;
        }
    }
    return cross;
}

double cell_magnitude(double dx_abs, double dy_abs) {
    if (dx_abs < 0 || dy_abs < 0) {
        throw std::invalid_argument("cell magnitudes must be non-negative");
    }
    return std::sqrt(dy_abs * dy_abs + dx_abs * dx_abs);
}

namespace {

OrientationField build_field_impl(const GrayImage& img, const GridParams& params,
                                  bool parallel) {
    params.validate();
    const int sigma = params.sigma;
    if (img.width < sigma + 2 || img.height < sigma + 2) {
        throw std::invalid_argument("image too small for a single grid cell");
    }

    OrientationField field;
    field.cells_x = (img.width - 2) / sigma;
    field.cells_y = (img.height - 2) / sigma;
    const std::size_t n = static_cast<std::size_t>(field.cells_x) * field.cells_y;
    field.unit_x.assign(n, 0.0);
    field.unit_y.assign(n, 0.0);
    field.magnitude.assign(n, 0.0);
    field.sign_y.assign(n, 1);

#pragma omp parallel for schedule(static) if (parallel)
    for (int r = 0; r < field.cells_y; ++r) {
        for (int c = 0; c < field.cells_x; ++c) {
            const int row_px = 1 + r * sigma;
            const int col_px = 1 + c * sigma;
            const CellSums sums = cell_gradient_sums(img, row_px, col_px, params);
            const double cross = cell_cross_sum(img, row_px, col_px, params);
            const double mag = cell_magnitude(sums.dx_abs, sums.dy_abs);
            const std::size_t i = field.idx(r, c);
            field.magnitude[i] = mag;
            if (mag > 0) {
                field.unit_x[i] = sums.dx_abs / mag;
                field.unit_y[i] = sums.dy_abs / mag;
            }
            field.sign_y[i] = cross >= 0 ? 1 : -1;
        }
    }
    return field;
}

}  // namespace

OrientationField build_orientation_field(const GrayImage& img,
                                         const GridParams& params,
                                         bool parallel) {
    return build_field_impl(img, params, parallel);
}

OrientationField build_orientation_field_serial(const GrayImage& img,
                                                const GridParams& params) {
    return build_field_impl(img, params, false);
}

void write_field_dump(const OrientationField& field, std::ostream& out) {
    char buf[128];
    for (int r = 0; r < field.cells_y; ++r) {
        for (int c = 0; c < field.cells_x; ++c) {
            const std::size_t i = field.idx(r, c);
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%+d,%.6f",
                          field.unit_x[i], field.unit_y[i],
                          static_cast<int>(field.sign_y[i]), field.magnitude[i]);
            out << buf << (c + 1 < field.cells_x ? "\t" : "");
        }
        out << "\n";
    }
}

}  // namespace fpl
