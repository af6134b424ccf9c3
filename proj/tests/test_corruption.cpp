#include <doctest.h>

#include <cmath>

#include "hsprior/corruption.hpp"
#include "hsprior/error.hpp"
#include "hsprior/objectives.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace hsprior;
using namespace hsprior::testing;

namespace {

double zero_fraction(const Mask& m) {
  return 1.0 - double(m.observed_count()) / double(m.cube().size());
}

}  // namespace

TEST_SUITE("corruption") {
  TEST_CASE("zero noise is the identity") {
    const HyperCube x = synthetic_scene(16, 16, 4);
    CHECK(add_gaussian_noise(x, 0.0, 3) == x);
  }

  TEST_CASE("noise field has the requested spread and is seeded") {
    const auto field = gaussian_noise_field(200000, 0.1, 3);
    double mean = 0.0, sq = 0.0;
    for (double v : field) mean += v;
    mean /= double(field.size());
    for (double v : field) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / double(field.size() - 1));
    CHECK(std::abs(sd - 0.1) < 0.002);
    CHECK(std::abs(mean) < 4 * 0.1 / std::sqrt(double(field.size())));
    CHECK(gaussian_noise_field(100, 0.1, 3) == std::vector<double>(field.begin(), field.begin() + 100));
    CHECK(gaussian_noise_field(100, 0.1, 4) != gaussian_noise_field(100, 0.1, 3));
  }

  TEST_CASE("noisy cubes are clipped to the unit interval") {
    const HyperCube x = synthetic_scene(32, 32, 4);
    const HyperCube noisy = add_gaussian_noise(x, 0.5, 1);
    CHECK(noisy.in_unit_range());
    const HyperCube extremes = add_gaussian_noise(HyperCube(8, 8, 2, 1.0), 0.3, 2);
    for (double v : extremes.values()) CHECK(v <= 1.0);
    CHECK(sigma_from_8bit(25) == doctest::Approx(25.0 / 255.0));
  }

  TEST_CASE("random stripe masks zero exactly count x width columns per band") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t cols = 16 + rng.below(48), width = 1 + rng.below(3);
      const std::size_t count = 1 + rng.below(cols / width);
      const Mask m = make_stripe_mask(8, cols, 3, count, width, {0, 3}, rng.next());
      CHECK(zero_fraction(m) == doctest::Approx(double(count * width) / double(cols)).epsilon(1e-12));
      // Whole columns: each column is uniformly 0 or 1 across rows.
      for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 1; r < 8; ++r) CHECK(m.cube().at(r, c, 0) == m.cube().at(0, c, 0));
    }
  }

  TEST_CASE("a 10 percent stripe mask on 64 columns") {
    const Mask m = make_stripe_mask(64, 64, 16, 4, 2, {0, 16}, 11);
    CHECK(zero_fraction(m) == doctest::Approx(0.125));
    CHECK(make_stripe_mask(64, 64, 16, 4, 2, {0, 16}, 11).cube() == m.cube());
  }

  TEST_CASE("band ranges restrict the stripes") {
    const std::size_t starts[] = {2, 7};
    const Mask m = make_stripe_mask(4, 12, 8, starts, 2, {2, 8});
    for (std::size_t b = 0; b < 8; ++b) {
      std::size_t zeros = 0;
      for (double v : m.cube().band(b)) zeros += v == 0.0;
      CHECK(zeros == (b >= 2 ? 4u * 4u : 0u));
    }
    CHECK(m.cube().at(0, 2, 5) == 0.0);
    CHECK(m.cube().at(0, 4, 5) == 1.0);
    CHECK_THROWS_AS(make_stripe_mask(4, 12, 8, starts, 2, {3, 9}), Error);
    const std::size_t outside[] = {11};
    CHECK_THROWS_AS(make_stripe_mask(4, 12, 8, outside, 2, {0, 8}), ShapeError);
    CHECK_THROWS_AS(make_stripe_mask(4, 12, 8, 7, 2, {0, 8}, 0), ShapeError);
  }

  TEST_CASE("apply_mask zeroes exactly the masked entries") {
    const HyperCube x = synthetic_scene(16, 16, 4);
    const Mask m = make_stripe_mask(16, 16, 4, 3, 1, {0, 4}, 5);
    const HyperCube y = apply_mask(x, m);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(y.values()[i] == (m.cube().values()[i] == 1.0 ? x.values()[i] : 0.0));
  }

  TEST_CASE("downsample_observation is the degradation operator") {
    Rng rng(12);
    const HyperCube x = random_cube(12, 8, 3, rng);
    for (std::size_t alpha : {1u, 2u, 4u}) CHECK(downsample_observation(x, alpha) == degrade_downsample(x, alpha));
  }
}
