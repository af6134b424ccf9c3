#include <doctest.h>

#include <cmath>
#include <limits>

#include "hsprior/adam.hpp"
#include "hsprior/error.hpp"
#include "support/oracles.hpp"

using namespace hsprior;
using namespace hsprior::testing;

TEST_SUITE("adam") {
  TEST_CASE("zero gradients leave parameters unchanged") {
    NdArray p({3}, std::vector<double>{1.0, -2.0, 0.5});
    const NdArray before = p;
    AdamState state(AdamOptions{}, std::vector<NdArray>{p});
    NdArray* params[] = {&p};
    adam_step(state, params, std::vector<NdArray>{NdArray({3})});
    CHECK(p == before);
    CHECK(state.step == 1);
  }

  TEST_CASE("the first step moves each element by lr against the gradient sign") {
    NdArray p({4}, 0.0);
    AdamOptions opts;
    opts.lr = 0.05;
    AdamState state(opts, std::vector<NdArray>{p});
    NdArray* params[] = {&p};
    adam_step(state, params, std::vector<NdArray>{NdArray({4}, std::vector<double>{2.0, -3.0, 1e-3, -7.5})});
    const double expected[] = {-0.05, 0.05, -0.05, 0.05};
    for (int i = 0; i < 4; ++i) CHECK(p[std::size_t(i)] == doctest::Approx(expected[i]).epsilon(1e-4));
  }

  TEST_CASE("matches a scalar reference on (w - 3)^2") {
    NdArray w({1}, 0.0);
    AdamOptions opts;
    opts.lr = 0.1;
    AdamState state(opts, std::vector<NdArray>{w});
    NdArray* params[] = {&w};
    const auto reference = scalar_adam_trajectory(0.0, 0.1, 50);
    for (int t = 0; t < 50; ++t) {
      adam_step(state, params, std::vector<NdArray>{NdArray({1}, 2.0 * (w[0] - 3.0))});
      CHECK(std::abs(w[0] - reference[std::size_t(t)]) < 1e-10);
    }
    CHECK(std::abs(w[0] - 3.0) < 3.0);
  }

  TEST_CASE("update magnitudes stay bounded and second moments non-negative") {
    Rng rng(17);
    NdArray p = random_array({64}, rng);
    AdamOptions opts;
    opts.lr = 0.01;
    AdamState state(opts, std::vector<NdArray>{p});
    NdArray* params[] = {&p};
    for (int t = 1; t <= 200; ++t) {
      const NdArray before = p;
      NdArray g = random_array({64}, rng, -10.0, 10.0);
      adam_step(state, params, std::vector<NdArray>{g});
      // Cauchy-Schwarz on the moment sums, with g = b1^2 / b2:
      // |m_hat| / sqrt(v_hat) <= (1 - b1) / sqrt(1 - b2) * sqrt((1 - g^t) / (1 - g)) * sqrt(1 - b2^t) / (1 - b1^t)
      const double g2 = opts.beta1 * opts.beta1 / opts.beta2;
      const double bound = opts.lr * (1 - opts.beta1) / std::sqrt(1 - opts.beta2) *
                           std::sqrt((1 - std::pow(g2, t)) / (1 - g2)) *
                           std::sqrt(1 - std::pow(opts.beta2, t)) / (1 - std::pow(opts.beta1, t));
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - before[i]) <= bound * (1 + 1e-12));
      for (double v : state.v[0].values()) CHECK(v >= 0.0);
    }
  }

  TEST_CASE("deterministic given state, parameters and gradients") {
    Rng rng(3);
    const NdArray p0 = random_array({10}, rng);
    const NdArray g = random_array({10}, rng);
    NdArray a = p0, b = p0;
    AdamState sa(AdamOptions{}, std::vector<NdArray>{a}), sb(AdamOptions{}, std::vector<NdArray>{b});
    NdArray* pa[] = {&a};
    NdArray* pb[] = {&b};
    for (int t = 0; t < 5; ++t) {
      adam_step(sa, pa, std::vector<NdArray>{g});
      adam_step(sb, pb, std::vector<NdArray>{g});
    }
    CHECK(a == b);
    CHECK(sa.m[0] == sb.m[0]);
    CHECK(sa.v[0] == sb.v[0]);
  }

  TEST_CASE("non-finite gradients are rejected by name without touching state") {
    NdArray p({2}, 1.0);
    AdamState state(AdamOptions{}, std::vector<NdArray>{p});
    NdArray* params[] = {&p};
    const std::vector<std::string> names{"enc0.down.weight"};
    try {
      adam_step(state, params, std::vector<NdArray>{NdArray({2}, std::vector<double>{0.0, std::nan("")})}, names);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(std::string(e.what()).find("enc0.down.weight") != std::string::npos);
    }
    CHECK(state.step == 0);
    CHECK(p == NdArray({2}, 1.0));
  }

  TEST_CASE("hyperparameters are validated") {
    AdamOptions bad;
    bad.beta2 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = AdamOptions{};
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
