#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fpl/orientation_field.hpp"
#include "fpl/synthetic.hpp"
#include "test_util.hpp"

using namespace fpl;

namespace {

GrayImage ramp_x(int side, int step) {
    GrayImage img(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            img.set(y, x, static_cast<std::uint8_t>(x * step));
        }
    }
    return img;
}

GrayImage ramp_y(int side, int step) {
    GrayImage img(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            img.set(y, x, static_cast<std::uint8_t>(y * step));
        }
    }
    return img;
}

}  // namespace

TEST_CASE("central differences") {
    GrayImage row(3, 1, std::vector<std::uint8_t>{10, 20, 40});
    CHECK(central_diff_x(row, 1, 0) == 30.0);

    GrayImage col(1, 3, std::vector<std::uint8_t>{0, 100, 200});
    CHECK(central_diff_y(col, 0, 1) == 200.0);

    GrayImage flat(5, 5, 9);
    for (int y = 0; y < 5; ++y) {
        for (int x = 1; x < 4; ++x) CHECK(central_diff_x(flat, x, y) == 0.0);
    }

    CHECK_THROWS_AS(central_diff_x(row, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(central_diff_x(row, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(central_diff_y(col, 0, 2), std::out_of_range);
}

TEST_CASE("central differences match a brute-force oracle everywhere") {
    const GrayImage img = fpl::test::random_image(8, 8, 21);
    for (int y = 0; y < 8; ++y) {
        for (int x = 1; x < 7; ++x) {
            const double expect = static_cast<double>(img.at(y, x + 1)) - img.at(y, x - 1);
            CHECK(central_diff_x(img, x, y) == expect);
        }
    }
    for (int y = 1; y < 7; ++y) {
        for (int x = 0; x < 8; ++x) {
            const double expect = static_cast<double>(img.at(y + 1, x)) - img.at(y - 1, x);
            CHECK(central_diff_y(img, x, y) == expect);
        }
    }
}

TEST_CASE("cell gradient sums on ramps") {
    const GridParams params{4};

    GrayImage flat(8, 8, 50);
    const CellSums zero = cell_gradient_sums(flat, 1, 1, params);
    CHECK(zero.dx_abs == 0.0);
    CHECK(zero.dy_abs == 0.0);
    CHECK(zero.dy_signed == 0.0);

    // horizontal ramp 10*x: every interior delta-x is 20, 2x2 interior pixels
    const CellSums hx = cell_gradient_sums(ramp_x(8, 10), 1, 1, params);
    CHECK(hx.dx_abs == 80.0);
    CHECK(hx.dy_abs == 0.0);
    CHECK(hx.dy_signed == 0.0);

    const CellSums vy = cell_gradient_sums(ramp_y(8, 10), 1, 1, params);
    CHECK(vy.dx_abs == 0.0);
    CHECK(vy.dy_abs == 80.0);
    CHECK(vy.dy_signed == 80.0);

    CHECK_THROWS_AS(cell_gradient_sums(flat, 0, 1, params), std::out_of_range);
    CHECK_THROWS_AS(cell_gradient_sums(flat, 1, 4, params), std::out_of_range);
    CHECK_THROWS_AS(cell_gradient_sums(flat, 1, 1, GridParams{3}),
                    std::invalid_argument);
}

TEST_CASE("cell magnitude") {
    CHECK(cell_magnitude(0, 0) == 0.0);
    CHECK(cell_magnitude(3, 4) == 5.0);
    CHECK(cell_magnitude(80, 80) == doctest::Approx(113.13708498984761).epsilon(1e-12));
    CHECK_THROWS_AS(cell_magnitude(-1, 0), std::invalid_argument);
}

TEST_CASE("field layout and flat image") {
    const GrayImage img(50, 50, 128);
    const OrientationField field = build_orientation_field(img, GridParams{12});
    CHECK(field.cells_x == 4);  // floor((50-2)/12)
    CHECK(field.cells_y == 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const auto i = field.idx(r, c);
            CHECK(field.magnitude[i] == 0.0);
            CHECK(field.unit_x[i] == 0.0);
            CHECK(field.unit_y[i] == 0.0);
            CHECK(field.sign_y[i] == 1);
        }
    }
    CHECK_THROWS_AS(build_orientation_field(GrayImage(13, 13, 0), GridParams{12}),
                    std::invalid_argument);
}

TEST_CASE("pure horizontal gradient gives unit x vectors") {
    const OrientationField field =
        build_orientation_field(ramp_x(40, 3), GridParams{12});
    for (std::size_t i = 0; i < field.unit_x.size(); ++i) {
        CHECK(field.unit_x[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(field.unit_y[i] == 0.0);
    }
}

TEST_CASE("field agrees cell-by-cell with independent recomputation") {
    const GrayImage img = generate_synthetic_ridge(100, 100, 30.0, 10.0, 160.0, 3, 2.0);
    const GridParams params{12};
    const OrientationField field = build_orientation_field(img, params);

    for (int r = 0; r < field.cells_y; ++r) {
        for (int c = 0; c < field.cells_x; ++c) {
            const int row_px = 1 + r * params.sigma;
            const int col_px = 1 + c * params.sigma;
            const CellSums sums = cell_gradient_sums(img, row_px, col_px, params);
            const double cross = cell_cross_sum(img, row_px, col_px, params);
            const double mag = cell_magnitude(sums.dx_abs, sums.dy_abs);
            const auto i = field.idx(r, c);
            CHECK(field.magnitude[i] == mag);
            if (mag > 0) {
                CHECK(field.unit_x[i] == sums.dx_abs / mag);
                CHECK(field.unit_y[i] == sums.dy_abs / mag);
            }
            CHECK(field.sign_y[i] == (cross >= 0 ? 1 : -1));
        }
    }
}

TEST_CASE("unit vectors are normalized or zero") {
    const GrayImage img = fpl::test::random_image(90, 70, 17);
    const OrientationField field = build_orientation_field(img, GridParams{12});
    for (std::size_t i = 0; i < field.unit_x.size(); ++i) {
        const double n2 = field.unit_x[i] * field.unit_x[i] +
                          field.unit_y[i] * field.unit_y[i];
        if (field.magnitude[i] == 0.0) {
            CHECK(n2 == 0.0);
        } else {
            CHECK(n2 == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("intensity scaling leaves units and signs, scales magnitudes") {
    GrayImage img = generate_synthetic_ridge(70, 70, 25.0, 8.0, 100.0, 9, 0.0);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(v / 2);  // stay below 128
    GrayImage doubled = img;
    for (auto& v : doubled.data) v = static_cast<std::uint8_t>(v * 2);

    const OrientationField a = build_orientation_field(img, GridParams{12});
    const OrientationField b = build_orientation_field(doubled, GridParams{12});
    for (std::size_t i = 0; i < a.unit_x.size(); ++i) {
        CHECK(b.unit_x[i] == a.unit_x[i]);
        CHECK(b.unit_y[i] == a.unit_y[i]);
        CHECK(b.sign_y[i] == a.sign_y[i]);
        CHECK(b.magnitude[i] == 2.0 * a.magnitude[i]);
    }
}

TEST_CASE("serial and parallel field builds are bit-identical") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const GrayImage img = fpl::test::random_image(130, 97, seed);
        const OrientationField par = build_orientation_field(img, GridParams{12}, true);
        const OrientationField ser = build_orientation_field_serial(img, GridParams{12});
        CHECK(par.unit_x == ser.unit_x);
        CHECK(par.unit_y == ser.unit_y);
        CHECK(par.magnitude == ser.magnitude);
        CHECK(par.sign_y == ser.sign_y);
    }
}

TEST_CASE("field build is deterministic") {
    const GrayImage img = fpl::test::random_image(64, 64, 5);
    const OrientationField a = build_orientation_field(img, GridParams{8});
    const OrientationField b = build_orientation_field(img, GridParams{8});
    CHECK(a.unit_x == b.unit_x);
    CHECK(a.magnitude == b.magnitude);
}

TEST_CASE("debug dump shape") {
    const GrayImage img = generate_synthetic_ridge(40, 30, 15.0, 8.0, 120.0, 1, 0.0);
    const OrientationField field = build_orientation_field(img, GridParams{12});
    std::ostringstream out;
    write_field_dump(field, out);

    std::istringstream in(out.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), '\t') == field.cells_x - 1);
        CHECK(std::count(line.begin(), line.end(), ',') == 3 * field.cells_x);
    }
    CHECK(rows == field.cells_y);
}
