#include "fpl/gray_image.hpp"

#include <cmath>
#include <stdexcept>

namespace fpl {

GrayImage::GrayImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw std::invalid_argument("zero-dimension image");
    }
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
    if (w <= 0 || h <= 0) {
        throw std::invalid_argument("zero-dimension image");
    }
    if (data.size() != static_cast<std::size_t>(w) * h) {
        throw std::invalid_argument("pixel buffer length does not match dimensions");
    }
}

double mean_intensity(const GrayImage& img) {
    if (img.empty()) {
        throw std::invalid_argument("mean of empty image");
    }
    double sum = 0;
    for (std::uint8_t v : img.data) sum += v;
    return sum / static_cast<double>(img.data.size());
}

namespace {

// Snap near-exact trig values so axis-aligned rotations stay lattice-exact.
double snap(double v) {
    if (std::abs(v) < 1e-12) return 0.0;
    if (std::abs(v - 1.0) < 1e-12) return 1.0;
    if (std::abs(v + 1.0) < 1e-12) return -1.0;
    return v;
}

}  // namespace

GrayImage rotate_about_center(const GrayImage& img, double angle_degrees,
                              std::uint8_t fill) {
    if (img.empty()) {
        throw std::invalid_argument("rotate of empty image");
    }
    const double rad = angle_degrees * 3.14159265358979323846 / 180.0;
    const double c = snap(std::cos(rad));
    const double s = snap(std::sin(rad));

    const int w = img.width, h = img.height;
    const int out_w =
        static_cast<int>(std::ceil(w * std::abs(c) + h * std::abs(s) - 1e-9));
    const int out_h =
        static_cast<int>(std::ceil(w * std::abs(s) + h * std::abs(c) - 1e-9));

    const double cx_out = (out_w - 1) / 2.0;
    const double cy_out = (out_h - 1) / 2.0;
    const double cx_in = (w - 1) / 2.0;
    const double cy_in = (h - 1) / 2.0;

    GrayImage out(out_w, out_h, fill);
    const std::uint8_t* src = img.data.data();
    for (int yo = 0; yo < out_h; ++yo) {
        const double dy = yo - cy_out;
        const double xs_row = cx_in - c * cx_out + s * dy;
        const double ys_row = cy_in + s * cx_out + c * dy;
        std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(yo) * out_w;
        for (int xo = 0; xo < out_w; ++xo) {
            const double xs = xs_row + c * xo;
            const double ys = ys_row - s * xo;

            const int x0 = static_cast<int>(std::floor(xs));
            const int y0 = static_cast<int>(std::floor(ys));
            const double fx = xs - x0;
            const double fy = ys - y0;

            double acc;
            if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
                const std::uint8_t* p = src + static_cast<std::size_t>(y0) * w + x0;
                const double top = p[0] + fx * (p[1] - p[0]);
                const double bot = p[w] + fx * (p[w + 1] - p[w]);
                acc = top + fy * (bot - top);
            } else {
                acc = 0;
                const double wts[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                                       fy * (1 - fx), fy * fx};
                const int xc[4] = {x0, x0 + 1, x0, x0 + 1};
                const int yc[4] = {y0, y0, y0 + 1, y0 + 1};
                for (int i = 0; i < 4; ++i) {
                    if (wts[i] == 0.0) continue;
                    const bool inside =
                        xc[i] >= 0 && xc[i] < w && yc[i] >= 0 && yc[i] < h;
                    acc += wts[i] * (inside ? img.at(yc[i], xc[i]) : fill);
                }
            }
            const long rounded = std::lround(acc);
            dst[xo] = static_cast<std::uint8_t>(
                rounded < 0 ? 0 : (rounded > 255 ? 255 : rounded));
        }
    }
    return out;
}

GrayImage center_crop(const GrayImage& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw std::invalid_argument("zero-dimension image");
    }
    if (out_w > img.width || out_h > img.height) {
        throw std::invalid_argument("crop exceeds input dimensions");
    }
    // odd margins drop the extra pixel on the right/bottom
    const int x0 = (img.width - out_w) / 2;
    const int y0 = (img.height - out_h) / 2;
    return crop_window(img, x0, y0, out_w, out_h);
}

GrayImage crop_window(const GrayImage& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width ||
        y0 + h > img.height) {
        throw std::out_of_range("crop window out of bounds");
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.data.data() +
                                  static_cast<std::size_t>(y0 + y) * img.width + x0;
        std::copy(src, src + w, out.data.begin() + static_cast<std::size_t>(y) * w);
    }
    return out;
}

}  // namespace fpl
