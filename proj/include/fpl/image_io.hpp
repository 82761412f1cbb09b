#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fpl/gray_image.hpp"

namespace fpl {

// Interleaved 8-bit RGB, row-major. Only used for overlay output.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // length == 3 * width * height

    RgbImage() = default;
    RgbImage(int w, int h);

    std::uint8_t* px(int y, int x) {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    const std::uint8_t* px(int y, int x) const {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

RgbImage to_rgb(const GrayImage& img);

// Sniffs PNG vs binary PGM (P5) by magic bytes. Color PNG input is reduced
// to luminance.
GrayImage load_image(const std::filesystem::path& path);

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

GrayImage load_png(const std::filesystem::path& path);
void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_png(const RgbImage& img, const std::filesystem::path& path);

}  // namespace fpl
