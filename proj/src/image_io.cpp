#include "fpl/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace fpl {

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw std::invalid_argument("zero-dimension image");
    }
    data.assign(static_cast<std::size_t>(3) * w * h, 0);
}

RgbImage to_rgb(const GrayImage& img) {
    RgbImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        out.data[3 * i + 0] = img.data[i];
        out.data[3 * i + 1] = img.data[i];
        out.data[3 * i + 2] = img.data[i];
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void unreadable(const std::filesystem::path& path,
                             const char* why) {
    throw std::runtime_error("unreadable file: " + path.string() + " (" + why +
                             ")");
}

// --- PGM (binary, P5) ---

int pgm_token(std::istream& in) {
    // skips whitespace and '#' comments between header fields
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            int value = 0;
            do {
                if (!std::isdigit(c)) return -1;
                value = value * 10 + (c - '0');
            } while ((c = in.get()) != EOF && !std::isspace(c));
            return value;
        }
    }
    return -1;
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) unreadable(path, "open failed");

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw std::runtime_error("unsupported format: " + path.string() +
                                 " (expected binary PGM P5)");
    }
    const int w = pgm_token(in);
    const int h = pgm_token(in);
    const int maxval = pgm_token(in);
    if (w < 0 || h < 0 || maxval < 0) unreadable(path, "bad PGM header");
    if (w == 0 || h == 0) {
        throw std::runtime_error("zero-dimension image: " + path.string());
    }
    if (maxval > 255) {
        throw std::runtime_error("unsupported format: " + path.string() +
                                 " (16-bit PGM)");
    }
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
        unreadable(path, "truncated pixel data");
    }
    if (maxval != 255) {
        for (auto& v : img.data) {
            v = static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
        }
    }
    return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
}

// --- PNG via libpng ---

GrayImage load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) unreadable(path, "open failed");

    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        unreadable(path, "not a PNG");
    }

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> buf;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        unreadable(path, "corrupt PNG");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (w == 0 || h == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("zero-dimension image: " + path.string());
    }

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const png_size_t rowbytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    buf.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    if (channels == 1) {
        for (png_uint_32 y = 0; y < h; ++y) {
            std::memcpy(img.data.data() + static_cast<std::size_t>(y) * w,
                        buf.data() + y * rowbytes, w);
        }
    } else if (channels == 3) {
        for (png_uint_32 y = 0; y < h; ++y) {
            const std::uint8_t* row = buf.data() + y * rowbytes;
            for (png_uint_32 x = 0; x < w; ++x) {
                const double luma = 0.299 * row[3 * x] + 0.587 * row[3 * x + 1] +
                                    0.114 * row[3 * x + 2];
                img.set(static_cast<int>(y), static_cast<int>(x),
                        static_cast<std::uint8_t>(std::lround(luma)));
            }
        }
    } else {
        throw std::runtime_error("unsupported format: " + path.string() +
                                 " (" + std::to_string(channels) + " channels)");
    }
    return img;
}

namespace {

void save_png_impl(const std::uint8_t* pixels, int width, int height,
                   int color_type, std::size_t rowbytes,
                   const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write file: " + path.string());

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("cannot write file: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(pixels + y * rowbytes));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png(const GrayImage& img, const std::filesystem::path& path) {
    save_png_impl(img.data.data(), img.width, img.height, PNG_COLOR_TYPE_GRAY,
                  static_cast<std::size_t>(img.width), path);
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
    save_png_impl(img.data.data(), img.width, img.height, PNG_COLOR_TYPE_RGB,
                  static_cast<std::size_t>(3) * img.width, path);
}

GrayImage load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) unreadable(path, "open failed");
    unsigned char head[8] = {0};
    probe.read(reinterpret_cast<char*>(head), 8);
    const auto got = probe.gcount();
    probe.close();

    if (got >= 2 && head[0] == 'P' && head[1] == '5') return load_pgm(path);
    static const unsigned char png_magic[8] = {0x89, 'P', 'N', 'G',
                                               0x0d, 0x0a, 0x1a, 0x0a};
    if (got >= 8 && std::memcmp(head, png_magic, 8) == 0) return load_png(path);
    if (got > 0 && got < 8 &&
        std::memcmp(head, png_magic, static_cast<std::size_t>(got)) == 0) {
        unreadable(path, "truncated");
    }
    if (got < 2) unreadable(path, "too short");
    throw std::runtime_error("unsupported format: " + path.string());
}

}  // namespace fpl
