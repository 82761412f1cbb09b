#include "fpl/patch_sampler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fpl/image_io.hpp"

namespace fpl {

std::string_view label_name(Label l) {
    return l == Label::Live ? "live" : "spoof";
}

std::optional<Label> parse_label(std::string_view s) {
    if (s == "live") return Label::Live;
    if (s == "spoof") return Label::Spoof;
    return std::nullopt;
}

int crop_amount(int sigma, int patch_multiplier) {
    if (sigma < 1 || patch_multiplier < 1) {
        throw std::invalid_argument("crop_amount needs positive sigma and multiplier");
    }
    const double side = static_cast<double>(sigma) * patch_multiplier;
    return static_cast<int>(std::ceil(std::sqrt(side * side / 8.0)));
}

int PatchParams::padded_side() const {
    return sigma * (patch_multiplier + 2 * padding_multiplier);
}

int PatchParams::final_side() const {
    return padded_side() - 2 * crop_amount(sigma, patch_multiplier);
}

void PatchParams::validate() const {
    GridParams{sigma}.validate();
    if (patch_multiplier < 1) {
        throw std::invalid_argument("patch_multiplier must be >= 1");
    }
    if (padding_multiplier < 0) {
        throw std::invalid_argument("padding_multiplier must be >= 0");
    }
    if (noise_factor < 0 || noise_factor > 1) {
        throw std::invalid_argument("noise_factor must be in [0,1]");
    }
    if (final_side() <= 0) {
        throw std::invalid_argument("crop leaves no pixels; increase padding");
    }
}

double patch_angle(const OrientationField& field, int cell_row, int cell_col,
                   const PatchParams& params) {
    const int m = params.patch_multiplier;
    if (cell_row < 0 || cell_col < 0 || cell_row + m > field.cells_y ||
        cell_col + m > field.cells_x) {
        throw std::out_of_range("patch cell block out of field bounds");
    }
    double dx = 0, dy = 0, vote = 0;
    for (int r = cell_row; r < cell_row + m; ++r) {
        for (int c = cell_col; c < cell_col + m; ++c) {
            const std::size_t i = field.idx(r, c);
            dx += field.unit_x[i];
            dy += field.unit_y[i];
            vote += field.sign_y[i] * field.unit_y[i];
        }
    }
    double angle;
    if (dx == 0 && dy == 0) {
        return 0.0;
    } else if (dx == 0) {
        angle = 90.0;
    } else {
        angle = std::atan(dy / dx) * 180.0 / 3.14159265358979323846;
    }
    const double sign = vote < 0 ? -1.0 : 1.0;  // ties face upward
    return sign * angle;
}

bool whitespace_keep(double patch_mean, double image_mean, double t) {
    return patch_mean < image_mean * (1.0 - t);
}

Extraction extract_patch(const GrayImage& img, const OrientationField& field,
                         int cell_row, int cell_col, const PatchParams& params,
                         double image_mean, std::uint8_t fill) {
    params.validate();
    const int sigma = params.sigma;
    const int m = params.patch_multiplier;
    const int p = params.padding_multiplier;

    if (cell_row < 0 || cell_col < 0 || cell_row + m > field.cells_y ||
        cell_col + m > field.cells_x) {
        return {std::nullopt, RejectReason::OutOfBounds};
    }
    // padded extent, aligned so its central m*sigma block sits on the
    // central cells (field cells start at pixel (1,1))
    const int side = params.padded_side();
    const int y0 = 1 + (cell_row - p) * sigma;
    const int x0 = 1 + (cell_col - p) * sigma;
    if (y0 < 0 || x0 < 0 || y0 + side > img.height || x0 + side > img.width) {
        return {std::nullopt, RejectReason::OutOfBounds};
    }

    const double theta = patch_angle(field, cell_row, cell_col, params);
    GrayImage block = crop_window(img, x0, y0, side, side);
    GrayImage rotated = rotate_about_center(block, -theta, fill);
    GrayImage cropped = center_crop(rotated, params.final_side(), params.final_side());

    if (!whitespace_keep(mean_intensity(cropped), image_mean, params.noise_factor)) {
        return {std::nullopt, RejectReason::Whitespace};
    }
    Patch patch;
    patch.pixels = std::move(cropped);
    patch.cell_row = cell_row;
    patch.cell_col = cell_col;
    patch.theta_degrees = theta;
    return {std::move(patch), RejectReason::Whitespace};
}

Extraction extract_patch(const GrayImage& img, const OrientationField& field,
                         int cell_row, int cell_col, const PatchParams& params) {
    return extract_patch(img, field, cell_row, cell_col, params,
                         mean_intensity(img));
}

namespace {

std::vector<Patch> dense_sample_impl(const GrayImage& img,
                                     const PatchParams& params,
                                     std::string_view source_id,
                                     std::optional<Label> label,
                                     bool parallel) {
    params.validate();
    const OrientationField field =
        build_orientation_field(img, GridParams{params.sigma}, parallel);
    const double image_mean = mean_intensity(img);
    const int m = params.patch_multiplier;
    const int origins_y = field.cells_y - m + 1;
    const int origins_x = field.cells_x - m + 1;
    if (origins_y <= 0 || origins_x <= 0) return {};

    const int total = origins_y * origins_x;
    std::vector<std::optional<Patch>> slots(total);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int i = 0; i < total; ++i) {
        const int r = i / origins_x;
        const int c = i % origins_x;
        Extraction e = extract_patch(img, field, r, c, params, image_mean);
        if (e.kept()) slots[i] = std::move(e.patch);
    }

    std::vector<Patch> kept;
    for (auto& slot : slots) {
        if (!slot) continue;
        slot->source_id = std::string(source_id);
        slot->label = label;
        kept.push_back(std::move(*slot));
    }
    return kept;
}

}  // namespace

std::vector<Patch> dense_sample(const GrayImage& img, const PatchParams& params,
                                std::string_view source_id,
                                std::optional<Label> label, bool parallel) {
    return dense_sample_impl(img, params, source_id, label, parallel);
}

std::vector<Patch> dense_sample_serial(const GrayImage& img,
                                       const PatchParams& params,
                                       std::string_view source_id,
                                       std::optional<Label> label) {
    return dense_sample_impl(img, params, source_id, label, false);
}

namespace {

constexpr const char* kManifestHeader =
    "filename,source_id,cell_row,cell_col,theta_degrees,label";

std::string patch_filename(const Patch& p) {
    return p.source_id + "_r" + std::to_string(p.cell_row) + "_c" +
           std::to_string(p.cell_col) + ".png";
}

}  // namespace

std::size_t persist_patches(const std::vector<Patch>& patches,
                            const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto manifest_path = out_dir / "manifest.csv";
    const bool fresh = !std::filesystem::exists(manifest_path);

    std::ofstream manifest(manifest_path, std::ios::app);
    if (!manifest) {
        throw std::runtime_error("cannot write file: " + manifest_path.string());
    }
    if (fresh) manifest << kManifestHeader << "\n";

    std::set<std::string> seen;
    char theta_buf[64];
    std::size_t written = 0;
    for (const Patch& p : patches) {
        const std::string name = patch_filename(p);
        const auto file = out_dir / name;
        if (!seen.insert(name).second || std::filesystem::exists(file)) {
            throw std::runtime_error("duplicate patch name: " + name);
        }
        save_png(p.pixels, file);
        std::snprintf(theta_buf, sizeof(theta_buf), "%.10g", p.theta_degrees);
        manifest << name << "," << p.source_id << "," << p.cell_row << ","
                 << p.cell_col << "," << theta_buf << ","
                 << (p.label ? label_name(*p.label) : std::string_view{}) << "\n";
        ++written;
    }
    if (!manifest) {
        throw std::runtime_error("cannot write file: " + manifest_path.string());
    }
    return written;
}

std::vector<Patch> load_patch_store(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.csv";
    std::ifstream manifest(manifest_path);
    if (!manifest) {
        throw std::runtime_error("unreadable file: " + manifest_path.string());
    }
    std::string line;
    if (!std::getline(manifest, line) || line != kManifestHeader) {
        throw std::runtime_error("corrupt manifest: " + manifest_path.string());
    }
    std::vector<Patch> patches;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string filename, source_id, row_s, col_s, theta_s, label_s;
        if (!std::getline(ss, filename, ',') || !std::getline(ss, source_id, ',') ||
            !std::getline(ss, row_s, ',') || !std::getline(ss, col_s, ',') ||
            !std::getline(ss, theta_s, ',')) {
            throw std::runtime_error("corrupt manifest: " + manifest_path.string());
        }
        std::getline(ss, label_s, ',');

        Patch p;
        p.pixels = load_png(dir / filename);
        p.source_id = source_id;
        p.cell_row = std::stoi(row_s);
        p.cell_col = std::stoi(col_s);
        p.theta_degrees = std::stod(theta_s);
        p.label = parse_label(label_s);
        patches.push_back(std::move(p));
    }
    return patches;
}

}  // namespace fpl
