#pragma once

#include <cstdint>
#include <vector>

namespace fpl {

// 8-bit single-channel raster, row-major. Immutable by convention once
// built: every operation below returns a new image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // length == width * height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0);
    GrayImage(int w, int h, std::vector<std::uint8_t> pixels);

    bool empty() const { return width == 0 || height == 0; }
    std::size_t pixel_count() const { return data.size(); }

    std::uint8_t at(int y, int x) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    void set(int y, int x, std::uint8_t v) {
        data[static_cast<std::size_t>(y) * width + x] = v;
    }
};

double mean_intensity(const GrayImage& img);

// Rotates the full image about its center; the output canvas grows to hold
// the rotated footprint. Source pixels are sampled with bilinear
// interpolation, everything outside the source takes `fill`.
GrayImage rotate_about_center(const GrayImage& img, double angle_degrees,
                              std::uint8_t fill = 255);

// Centered window; when the discarded margin is odd the extra pixel is
// dropped on the right/bottom side.
GrayImage center_crop(const GrayImage& img, int out_w, int out_h);

// Plain axis-aligned sub-window copy, no centering.
GrayImage crop_window(const GrayImage& img, int x0, int y0, int w, int h);

}  // namespace fpl
