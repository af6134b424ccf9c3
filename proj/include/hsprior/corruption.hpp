#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hsprior/cube.hpp"

namespace hsprior {

/// Half-open band interval [first, last).
struct BandRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Converts a noise level quoted on the 0-255 scale to the [0, 1] scale.
constexpr double sigma_from_8bit(double sigma255) { return sigma255 / 255.0; }

/// Zero-mean Gaussian field of standard deviation `sigma`, one draw per element
/// in band-sequential order.
std::vector<double> gaussian_noise_field(std::size_t count, double sigma, std::uint64_t seed);

/// x + N(0, sigma^2), clipped to [0, 1]. sigma is on the [0, 1] scale.
HyperCube add_gaussian_noise(const HyperCube& x, double sigma, std::uint64_t seed);

/// Vertical stripes of zeros `stripe_width` columns wide at seeded random,
/// non-overlapping column offsets, applied to the bands in `bands`.
Mask make_stripe_mask(std::size_t rows, std::size_t cols, std::size_t band_count, std::size_t stripe_count,
                      std::size_t stripe_width, BandRange bands, std::uint64_t seed);

/// Same, with explicit stripe start columns (stripes may overlap).
Mask make_stripe_mask(std::size_t rows, std::size_t cols, std::size_t band_count,
                      std::span<const std::size_t> start_columns, std::size_t stripe_width, BandRange bands);

/// Zeroes the masked-out entries of x (the "do nothing" inpainting input).
HyperCube apply_mask(const HyperCube& x, const Mask& m);

/// Low-resolution observation; identical to degrade_downsample.
HyperCube downsample_observation(const HyperCube& x, std::size_t alpha);

}  // namespace hsprior
