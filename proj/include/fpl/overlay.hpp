#pragma once

#include "fpl/image_io.hpp"
#include "fpl/metrics.hpp"
#include "fpl/patch_sampler.hpp"

namespace fpl {

// Draws a semi-transparent sigma-sized square at the center of each
// patch's central region: green for Live patch decisions, red for Spoof.
// Whitespace-rejected regions stay unmarked.
RgbImage render_overlay(const GrayImage& img, const FingerprintResult& result,
                        const PatchParams& params);

// Center pixel of the central m*sigma block for a patch origin.
int patch_center_px(int cell_index, const PatchParams& params);

}  // namespace fpl
