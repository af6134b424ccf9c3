#include "hsprior/corruption.hpp"

#include <algorithm>
#include <string>

#include "hsprior/error.hpp"
#include "hsprior/objectives.hpp"
#include "hsprior/random.hpp"

namespace hsprior {

std::vector<double> gaussian_noise_field(std::size_t count, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  std::vector<double> noise(count, 0.0);
  if (sigma == 0.0) return noise;
  Rng rng(seed);
  for (double& v : noise) v = sigma * rng.normal();
  return noise;
}

HyperCube add_gaussian_noise(const HyperCube& x, double sigma, std::uint64_t seed) {
  const std::vector<double> noise = gaussian_noise_field(x.size(), sigma, seed);
  HyperCube out = x;
  if (sigma == 0.0) return out;
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::clamp(values[i] + noise[i], 0.0, 1.0);
  return out;
}

namespace {

void check_band_range(BandRange bands, std::size_t band_count) {
  if (bands.first > bands.last || bands.last > band_count) {
    throw ShapeError("band range", "[" + std::to_string(bands.first) + ", " + std::to_string(bands.last) +
                                       ") does not fit " + std::to_string(band_count) + " bands");
  }
}

}  // namespace

Mask make_stripe_mask(std::size_t rows, std::size_t cols, std::size_t band_count,
                      std::span<const std::size_t> start_columns, std::size_t stripe_width, BandRange bands) {
  check_band_range(bands, band_count);
  HyperCube m(rows, cols, band_count, 1.0);
  for (std::size_t start : start_columns) {
    if (stripe_width == 0 || start + stripe_width > cols) {
      throw ShapeError("cols", "stripe at column " + std::to_string(start) + " of width " +
                                   std::to_string(stripe_width) + " does not fit " + std::to_string(cols) +
                                   " columns");
    }
    for (std::size_t b = bands.first; b < bands.last; ++b) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = start; c < start + stripe_width; ++c) m.at(r, c, b) = 0.0;
      }
    }
  }
  return Mask(std::move(m));
}

Mask make_stripe_mask(std::size_t rows, std::size_t cols, std::size_t band_count, std::size_t stripe_count,
                      std::size_t stripe_width, BandRange bands, std::uint64_t seed) {
  if (stripe_count == 0) return make_stripe_mask(rows, cols, band_count, std::span<const std::size_t>{}, 1, bands);
  if (stripe_width == 0) throw ShapeError("stripe width", "must be positive");
  if (stripe_count * stripe_width > cols) {
    throw ShapeError("cols", std::to_string(stripe_count) + " stripes of width " + std::to_string(stripe_width) +
                                 " do not fit " + std::to_string(cols) + " columns without overlap");
  }
  // Choose sorted distinct slots among (cols - count*width + count) and spread
  // them apart by (width - 1) so consecutive stripes never overlap.
  const std::size_t slots = cols - stripe_count * stripe_width + stripe_count;
  std::vector<std::size_t> pool(slots);
  for (std::size_t i = 0; i < slots; ++i) pool[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < stripe_count; ++i) std::swap(pool[i], pool[i + rng.below(slots - i)]);
  std::vector<std::size_t> starts(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(stripe_count));
  std::sort(starts.begin(), starts.end());
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] += i * (stripe_width - 1);
  return make_stripe_mask(rows, cols, band_count, starts, stripe_width, bands);
}

HyperCube apply_mask(const HyperCube& x, const Mask& m) {
  require_same_shape(x, m.cube(), "apply_mask");
  HyperCube out = x;
  auto values = out.values();
  const auto mv = m.cube().values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= mv[i];
  return out;
}

HyperCube downsample_observation(const HyperCube& x, std::size_t alpha) { return degrade_downsample(x, alpha); }

}  // namespace hsprior
