#include "fpl/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "fpl/rng.hpp"

namespace fpl {

GrayImage generate_synthetic_ridge(int width, int height, double angle_degrees,
                                   double period_px, double contrast,
                                   std::uint64_t seed, double noise_amplitude) {
    if (period_px < 4) {
        throw std::invalid_argument("ridge period must be >= 4 px");
    }
    if (contrast <= 0 || contrast > 255) {
        throw std::invalid_argument("contrast must be in (0, 255]");
    }
    if (noise_amplitude < 0) {
        throw std::invalid_argument("noise amplitude must be >= 0");
    }
    const double rad = angle_degrees * 3.14159265358979323846 / 180.0;
    const double cx = std::cos(rad);
    const double sy = std::sin(rad);
    const double k = 2.0 * 3.14159265358979323846 / period_px;

    Rng rng(seed);
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double v = 128.0 + (contrast / 2.0) * std::sin(k * (x * cx + y * sy));
            if (noise_amplitude > 0) {
                v += rng.uniform(-noise_amplitude, noise_amplitude);
            }
            const long q = std::lround(v);
            img.set(y, x, static_cast<std::uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q)));
        }
    }
    return img;
}

}  // namespace fpl
