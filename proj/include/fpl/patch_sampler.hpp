#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpl/gray_image.hpp"
#include "fpl/orientation_field.hpp"

namespace fpl {

enum class Label { Live, Spoof };

std::string_view label_name(Label l);
std::optional<Label> parse_label(std::string_view s);

struct PatchParams {
    int sigma = 12;             // grid cell side, pixels
    int patch_multiplier = 10;  // central grid cells per patch side (m)
    int padding_multiplier = 2; // extra grid cells per side (p)
    double noise_factor = 0.1;  // whitespace rejection margin t, in [0,1]

    int padded_side() const;  // sigma * (m + 2p)
    int final_side() const;   // padded_side - 2 * crop_amount
    void validate() const;
};

// Per-side crop that removes all rotation fill at the worst-case 45 degree
// orientation: ceil(sqrt((sigma*m)^2 / 8)).
int crop_amount(int sigma, int patch_multiplier);

struct Patch {
    GrayImage pixels;        // final_side x final_side
    std::string source_id;
    int cell_row = 0;        // top-left central grid cell
    int cell_col = 0;
    double theta_degrees = 0;  // angle removed by normalization, [-90, 90]
    std::optional<Label> label;
};

// Orientation of the m x m central-cell block, folded into [-90, 90].
// Padding cells do not contribute.
double patch_angle(const OrientationField& field, int cell_row, int cell_col,
                   const PatchParams& params);

// Keep iff patch_mean < image_mean * (1 - t).
bool whitespace_keep(double patch_mean, double image_mean, double t);

enum class RejectReason { Whitespace, OutOfBounds };

struct Extraction {
    std::optional<Patch> patch;
    RejectReason reason = RejectReason::Whitespace;

    bool kept() const { return patch.has_value(); }
};

// Gather padded block -> measure angle -> rotate by -theta -> center-crop
// to the final side -> whitespace filter. The fill parameter exists so
// tests can plant a sentinel; production callers leave it at 255.
Extraction extract_patch(const GrayImage& img, const OrientationField& field,
                         int cell_row, int cell_col, const PatchParams& params,
                         double image_mean, std::uint8_t fill = 255);
Extraction extract_patch(const GrayImage& img, const OrientationField& field,
                         int cell_row, int cell_col, const PatchParams& params);

// Every origin in row-major order, stride one grid cell; kept patches only.
std::vector<Patch> dense_sample(const GrayImage& img, const PatchParams& params,
                                std::string_view source_id = {},
                                std::optional<Label> label = {},
                                bool parallel = true);
std::vector<Patch> dense_sample_serial(const GrayImage& img,
                                       const PatchParams& params,
                                       std::string_view source_id = {},
                                       std::optional<Label> label = {});

// Writes one PNG per patch named "<source_id>_r<row>_c<col>.png" plus a
// manifest.csv row; repeated calls append. Duplicate names are an error,
// never a silent overwrite. Returns the number of files written.
std::size_t persist_patches(const std::vector<Patch>& patches,
                            const std::filesystem::path& out_dir);

// Reloads a persisted store (manifest + PNGs).
std::vector<Patch> load_patch_store(const std::filesystem::path& dir);

}  // namespace fpl
