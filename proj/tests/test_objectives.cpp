#include <doctest.h>

#include "hsprior/error.hpp"
#include "hsprior/objectives.hpp"
#include "hsprior/ops.hpp"
#include "support/oracles.hpp"

using namespace hsprior;
using namespace hsprior::testing;

namespace {

Mask random_mask(std::size_t rows, std::size_t cols, std::size_t bands, Rng& rng, double keep = 0.7) {
  HyperCube m(rows, cols, bands);
  for (double& v : m.values()) v = rng.uniform() < keep ? 1.0 : 0.0;
  m.values()[0] = 1.0;
  return Mask(std::move(m));
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("energy_l2 examples") {
    Rng rng(1);
    const HyperCube x = random_cube(4, 5, 3, rng);
    CHECK(energy_l2(x, x) == 0.0);
    HyperCube shifted = x;
    for (double& v : shifted.values()) v += 0.1;
    CHECK(energy_l2(shifted, x) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK_THROWS_AS(energy_l2(x, random_cube(4, 5, 2, rng)), ShapeError);
  }

  TEST_CASE("energies and block averaging match loop oracles") {
    Rng rng(2);
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t alpha = 1 + rng.below(3);
      const std::size_t rows = alpha * (1 + rng.below(4)), cols = alpha * (1 + rng.below(4)), bands = 1 + rng.below(4);
      const HyperCube x = random_cube(rows, cols, bands, rng);
      const HyperCube y = random_cube(rows, cols, bands, rng);
      const Mask m = random_mask(rows, cols, bands, rng);
      CHECK(std::abs(energy_l2(x, y) - mse_reference(x, y)) < 1e-12);
      CHECK(std::abs(energy_masked(x, y, m) - masked_mse_reference(x, y, m.cube())) < 1e-12);
      const HyperCube reduced = degrade_downsample(x, alpha);
      const HyperCube expected = block_mean_reference(x, alpha);
      REQUIRE(reduced.same_shape(expected));
      for (std::size_t i = 0; i < reduced.size(); ++i) CHECK(std::abs(reduced.values()[i] - expected.values()[i]) < 1e-12);
      const HyperCube low = random_cube(rows / alpha, cols / alpha, bands, rng);
      CHECK(std::abs(energy_sr(x, low, alpha) - mse_reference(block_mean_reference(x, alpha), low)) < 1e-12);
    }
  }

  TEST_CASE("energy_masked reduces to energy_l2 and ignores masked-out differences") {
    Rng rng(3);
    const HyperCube x = random_cube(6, 6, 2, rng);
    const HyperCube y = random_cube(6, 6, 2, rng);
    CHECK(energy_masked(x, y, Mask::all_ones(6, 6, 2)) == energy_l2(x, y));
    const Mask m = random_mask(6, 6, 2, rng);
    HyperCube z = x;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (m.cube().values()[i] == 0.0) z.values()[i] += 0.5;
    }
    CHECK(energy_masked(z, x, m) == 0.0);
  }

  TEST_CASE("an all-zero mask is rejected") {
    const HyperCube x(2, 2, 1, 0.5);
    const Mask empty(HyperCube(2, 2, 1, 0.0));
    CHECK_THROWS_AS(energy_masked(x, x, empty), Error);
  }

  TEST_CASE("degrade_downsample examples") {
    const HyperCube constant(6, 4, 3, 0.42);
    const HyperCube reduced = degrade_downsample(constant, 2);
    CHECK(reduced.rows() == 3);
    CHECK(reduced.cols() == 2);
    CHECK(reduced.bands() == 3);
    for (double v : reduced.values()) CHECK(v == doctest::Approx(0.42).epsilon(1e-15));

    Rng rng(4);
    const HyperCube x = random_cube(3, 5, 2, rng);
    CHECK(degrade_downsample(x, 1) == x);

    HyperCube checker(4, 4, 1);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) checker.at(r, c, 0) = double((r + c) % 2);
    const HyperCube halved = degrade_downsample(checker, 2);
    for (double v : halved.values()) CHECK(v == 0.5);

    CHECK_THROWS_AS(degrade_downsample(HyperCube(5, 4, 1), 2), ShapeError);
  }

  TEST_CASE("energy_sr examples") {
    Rng rng(5);
    const HyperCube low = random_cube(3, 4, 2, rng);
    const NdArray up = upsample(low.to_array(), {1, 2, 2}, UpsampleMode::nearest);
    CHECK(energy_sr(HyperCube::from_array(up), low, 2) == doctest::Approx(0.0).epsilon(1e-30));
    const HyperCube x = random_cube(3, 4, 2, rng);
    CHECK(energy_sr(x, low, 1) == energy_l2(x, low));
    CHECK_THROWS_AS(energy_sr(random_cube(6, 6, 2, rng), low, 2), ShapeError);
  }

  TEST_CASE("energies are non-negative and block averaging is linear in scale") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const HyperCube x = random_cube(4, 4, 3, rng);
      const HyperCube y = random_cube(4, 4, 3, rng);
      CHECK(energy_l2(x, y) >= 0.0);
      CHECK(energy_masked(x, y, random_mask(4, 4, 3, rng)) >= 0.0);
      CHECK(energy_sr(x, degrade_downsample(y, 2), 2) >= 0.0);
      const double c = 0.25 + rng.uniform();
      HyperCube scaled = x;
      for (double& v : scaled.values()) v *= c;
      const HyperCube a = degrade_downsample(scaled, 2), b = degrade_downsample(x, 2);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(c * b.values()[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("masked energy is blind to the observation where the mask is zero") {
    Rng rng(7);
    const std::size_t n = 5 * 4 * 2;
    const Mask m = random_mask(5, 4, 2, rng, 0.5);
    const HyperCube obs = random_cube(5, 4, 2, rng);
    HyperCube altered = obs;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.cube().values()[i] == 0.0) altered.values()[i] = rng.uniform();
    }
    const NdArray x = random_array({2, 5, 4}, rng, 0.0, 1.0);
    std::vector<double> values;
    std::vector<NdArray> grads;
    for (const HyperCube* target : std::vector<const HyperCube*>{&obs, &altered}) {
      Tape tape;
      const NodeId p = tape.parameter(x);
      const NodeId e = masked_energy(tape, p, tape.constant(target->to_array()), tape.constant(m.cube().to_array()));
      values.push_back(tape.value(e)[0]);
      grads.push_back(tape.backward(e)[0]);
    }
    CHECK(values[0] == values[1]);
    CHECK(grads[0] == grads[1]);
  }

  TEST_CASE("graph energies agree with the cube functions and their gradients with finite differences") {
    Rng rng(8);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const HyperCube target = random_cube(4, 6, 3, rng);
      const Mask m = random_mask(4, 6, 3, rng);
      const HyperCube low = random_cube(2, 3, 3, rng);
      const NdArray x = random_array({3, 4, 6}, rng, 0.0, 1.0);
      const HyperCube xc = HyperCube::from_array(x);

      Tape tape;
      const NodeId p = tape.parameter(x);
      const NodeId t = tape.constant(target.to_array());
      const NodeId e_l2 = l2_energy(tape, p, t);
      const NodeId e_mask = masked_energy(tape, p, t, tape.constant(m.cube().to_array()));
      const NodeId e_sr = sr_energy(tape, p, tape.constant(low.to_array()), 2);
      CHECK(tape.value(e_l2)[0] == energy_l2(xc, target));
      CHECK(tape.value(e_mask)[0] == energy_masked(xc, target, m));
      CHECK(tape.value(e_sr)[0] == energy_sr(xc, low, 2));
      for (NodeId e : {e_l2, e_mask, e_sr}) {
        const auto grads = tape.backward(e);
        worst = std::max(worst, check_gradients(tape, e, grads).worst_relative);
      }
    }
    CHECK(worst < 1e-4);
  }
}
