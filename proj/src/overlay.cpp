#include "fpl/overlay.hpp"

#include <cmath>
#include <stdexcept>

namespace fpl {

int patch_center_px(int cell_index, const PatchParams& params) {
    // central block starts at pixel 1 + cell*sigma (field tiling origin)
    return 1 + cell_index * params.sigma +
           params.patch_multiplier * params.sigma / 2;
}

RgbImage render_overlay(const GrayImage& img, const FingerprintResult& result,
                        const PatchParams& params) {
    params.validate();
    RgbImage out = to_rgb(img);

    constexpr double kAlpha = 0.45;
    const int half = params.sigma / 2;

    for (const PerPatchResult& p : result.per_patch) {
        const int cx = patch_center_px(p.cell_col, params);
        const int cy = patch_center_px(p.cell_row, params);
        if (cx < 0 || cy < 0 || cx >= img.width || cy >= img.height) {
            throw std::invalid_argument("inconsistent geometry: patch center outside image");
        }
        const int r = p.decision == Label::Spoof ? 255 : 0;
        const int g = p.decision == Label::Spoof ? 0 : 255;

        for (int y = cy - half; y < cy - half + params.sigma; ++y) {
            if (y < 0 || y >= img.height) continue;
            for (int x = cx - half; x < cx - half + params.sigma; ++x) {
                if (x < 0 || x >= img.width) continue;
                std::uint8_t* px = out.px(y, x);
                px[0] = static_cast<std::uint8_t>(
                    std::lround((1 - kAlpha) * px[0] + kAlpha * r));
                px[1] = static_cast<std::uint8_t>(
                    std::lround((1 - kAlpha) * px[1] + kAlpha * g));
                px[2] = static_cast<std::uint8_t>(std::lround((1 - kAlpha) * px[2]));
            }
        }
    }
    return out;
}

}  // namespace fpl
