#pragma once

#include <cstdint>

#include "fpl/gray_image.hpp"

namespace fpl {

// Sinusoidal stripe fixture standing in for ridge structure:
//   128 + (contrast/2) * sin(2*pi*(x*cos a + y*sin a)/period)
// plus seeded uniform noise in [-noise_amplitude, noise_amplitude].
// The dominant gradient direction is (cos a, sin a), perpendicular to the
// stripes. period >= 4, contrast in (0, 255].
GrayImage generate_synthetic_ridge(int width, int height, double angle_degrees,
                                   double period_px, double contrast,
                                   std::uint64_t seed,
                                   double noise_amplitude = 2.0);

}  // namespace fpl
