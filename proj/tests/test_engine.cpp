#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsprior/corruption.hpp"
#include "hsprior/engine.hpp"
#include "hsprior/error.hpp"
#include "hsprior/objectives.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace hsprior;
using namespace hsprior::testing;

namespace {

TaskConfig small_job(Task task, std::size_t iters, std::uint64_t seed = 1) {
  TaskConfig job = TaskConfig::defaults(task);
  job.arch.levels = 2;
  job.arch.channels = {8, 16};
  job.arch.skip = {true, true};
  job.iters = iters;
  job.seed = seed;
  return job;
}

RunHistory history_of(std::initializer_list<double> energies) {
  RunHistory h;
  h.energy = energies;
  return h;
}

/// Iterations until the energy first drops to `threshold` (budget + 1 if never).
std::size_t iterations_to(const RunHistory& h, double threshold) {
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.energy[i] <= threshold) return i;
  return h.size() + 1;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("input noise is uniform on [0, b] and seeded") {
    const NdArray z = make_input_noise({100000}, 5, 0.1);
    double mean = 0.0;
    for (double v : z.values()) {
      CHECK((v >= 0.0 && v <= 0.1));
      mean += v;
    }
    mean /= double(z.size());
    const double se = 0.1 / std::sqrt(12.0 * double(z.size()));
    CHECK(std::abs(mean - 0.05) < 3 * se);
    CHECK(make_input_noise({100000}, 5, 0.1) == z);
    CHECK(make_input_noise({100000}, 6, 0.1) != z);
  }

  TEST_CASE("perturbation is exact at zero and has the requested variance otherwise") {
    const NdArray z = make_input_noise({50000}, 1, 0.1);
    CHECK(perturb_input(z, 0.0, 9) == z);
    const NdArray a = perturb_input(z, 0.05, 1), b = perturb_input(z, 0.05, 2);
    CHECK(a != b);
    CHECK(perturb_input(z, 0.05, 1) == a);
    double sq = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sq += (a[i] - z[i]) * (a[i] - z[i]);
    CHECK(std::abs(sq / double(z.size()) / (0.05 * 0.05) - 1.0) < 0.05);
  }

  TEST_CASE("stop rule examples") {
    StopPolicy fixed;
    CHECK(check_stop(history_of({1.0, 0.9}), fixed, 3) == StopDecision::proceed);
    CHECK(check_stop(history_of({1.0, 0.9, 0.8}), fixed, 3) == StopDecision::stop);
    CHECK_THROWS_AS(check_stop(RunHistory{}, fixed, 3), Error);

    StopPolicy patience;
    patience.kind = StopPolicy::Kind::patience;
    patience.window = 2;
    patience.min_delta = 0.05;
    CHECK(check_stop(history_of({1.0, 0.9}), patience, 100) == StopDecision::proceed);
    CHECK(check_stop(history_of({1.0, 0.9, 0.8}), patience, 100) == StopDecision::proceed);
    CHECK(check_stop(history_of({1.0, 0.98, 0.97}), patience, 100) == StopDecision::stop);
    patience.min_delta = 0.0;
    CHECK(check_stop(history_of({1.0, 1.0, 1.2}), patience, 100) == StopDecision::stop);
  }

  TEST_CASE("configuration checks") {
    TaskConfig job = TaskConfig::defaults(Task::denoise);
    CHECK(job.iters == 3000);
    CHECK(TaskConfig::defaults(Task::inpaint).iters == 5000);
    CHECK(TaskConfig::defaults(Task::superres).iters == 2000);
    CHECK(job.adam.lr == 0.001);
    job.sr_factor = 2;
    CHECK_THROWS_AS(job.validate(), ConfigError);
    job = TaskConfig::defaults(Task::superres);
    job.sr_factor = 0;
    CHECK_THROWS_AS(job.validate(), ConfigError);
    const HyperCube x = synthetic_scene(16, 16, 4);
    CHECK_THROWS_AS(restore(small_job(Task::inpaint, 2), x), ConfigError);
    const Mask m = Mask::all_ones(16, 16, 4);
    CHECK_THROWS_AS(restore(small_job(Task::denoise, 2), x, &m), ConfigError);
    CHECK_THROWS_AS(restore(small_job(Task::denoise, 2), HyperCube(16, 16, 4, 1.5)), Error);
  }

  TEST_CASE("restore is deterministic per seed and returns the best iterate") {
    const HyperCube clean = synthetic_scene(16, 16, 4);
    const HyperCube noisy = add_gaussian_noise(clean, 0.1, 3);
    for (Variant v : {Variant::conv2d, Variant::conv3d}) {
      TaskConfig job = small_job(Task::denoise, 40);
      if (v == Variant::conv3d) {
        job.arch = ArchSpec::defaults(Variant::conv3d);
        job.arch.levels = 2;
        job.arch.channels = {4, 4};
        job.arch.skip = {true, true};
      }
      const RestoreResult a = restore(job, noisy, nullptr, &clean);
      const RestoreResult b = restore(job, noisy, nullptr, &clean);
      CHECK(a.restored == b.restored);
      CHECK(a.history.energy == b.history.energy);
      CHECK(a.history.mpsnr == b.history.mpsnr);
      CHECK(a.history.size() == 40);
      CHECK(a.restored.in_unit_range());
      const auto best = std::min_element(a.history.energy.begin(), a.history.energy.end());
      CHECK(std::size_t(best - a.history.energy.begin()) == a.history.best_iteration);
      CHECK(energy_l2(a.restored, noisy) == *best);
      job.seed = 2;
      CHECK(restore(job, noisy).restored != a.restored);
    }
  }

  TEST_CASE("input perturbation changes the trajectory but stays reproducible") {
    const HyperCube x = synthetic_scene(16, 16, 4);
    TaskConfig job = small_job(Task::denoise, 15);
    const RestoreResult plain = restore(job, x);
    job.perturb_sigma = 1.0 / 30.0;
    const RestoreResult jittered = restore(job, x);
    CHECK(jittered.history.energy != plain.history.energy);
    CHECK(restore(job, x).history.energy == jittered.history.energy);
  }

  TEST_CASE("inpainting ignores the observation where the mask is zero") {
    const HyperCube clean = synthetic_scene(16, 16, 4);
    const Mask m = make_stripe_mask(16, 16, 4, 3, 1, {0, 4}, 7);
    const HyperCube zeroed = apply_mask(clean, m);
    HyperCube garbage = clean;
    Rng rng(4);
    for (std::size_t i = 0; i < garbage.size(); ++i)
      if (m.cube().values()[i] == 0.0) garbage.values()[i] = rng.uniform();
    const TaskConfig job = small_job(Task::inpaint, 20);
    const RestoreResult a = restore(job, zeroed, &m);
    const RestoreResult b = restore(job, garbage, &m);
    CHECK(a.restored == b.restored);
    CHECK(a.history.energy == b.history.energy);
  }

  TEST_CASE("super-resolution returns the upscaled shape") {
    const HyperCube low = degrade_downsample(synthetic_scene(32, 32, 4), 2);
    TaskConfig job = small_job(Task::superres, 10);
    const RestoreResult r = restore(job, low);
    CHECK(r.restored.rows() == 32);
    CHECK(r.restored.cols() == 32);
    CHECK(r.restored.bands() == 4);
    CHECK(r.history.energy.back() < r.history.energy.front());
  }

  TEST_CASE("energy falls on a feasible target") {
    const HyperCube target = synthetic_scene(16, 16, 4);
    const RestoreResult r = restore(small_job(Task::denoise, 200), target);
    CHECK(r.history.energy[r.history.best_iteration] < 0.25 * r.history.energy.front());
  }

  TEST_CASE("a constant cube is fitted closely") {
    const HyperCube target(16, 16, 4, 0.5);
    const RestoreResult r = restore(small_job(Task::denoise, 300), target);
    CHECK(r.history.energy[r.history.best_iteration] < 1e-3);
  }

  TEST_CASE("patience stopping ends early and reports the shorter history") {
    const HyperCube target(16, 16, 4, 0.5);
    TaskConfig job = small_job(Task::denoise, 2000);
    job.stop.kind = StopPolicy::Kind::patience;
    job.stop.window = 20;
    job.stop.min_delta = 1e-3;
    const RestoreResult r = restore(job, target);
    CHECK(r.history.size() < 2000);
    CHECK(r.history.size() > 20);
  }

  TEST_CASE("natural images are fitted before their pixel-shuffled versions") {
    const HyperCube natural = synthetic_scene(32, 32, 4);
    const HyperCube shuffled = shuffle_pixels(natural, 99);
    std::vector<double> natural_iters, shuffled_iters;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      TaskConfig job = small_job(Task::denoise, 400, seed);
      const RestoreResult a = restore(job, natural);
      const RestoreResult b = restore(job, shuffled);
      const double threshold = 2.0 * a.history.energy[job.iters / 4];
      natural_iters.push_back(double(iterations_to(a.history, threshold)));
      shuffled_iters.push_back(double(iterations_to(b.history, threshold)));
    }
    std::sort(natural_iters.begin(), natural_iters.end());
    std::sort(shuffled_iters.begin(), shuffled_iters.end());
    CHECK(natural_iters[1] < shuffled_iters[1]);
  }

  TEST_CASE("history CSV") {
    RunHistory h = history_of({0.5, 0.25});
    h.millis = {1.0, 2.5};
    CHECK(history_csv(h, false) == "iteration,energy\n0,0.5\n1,0.25\n");
    CHECK(history_csv(h, true) == "iteration,energy,millis\n0,0.5,1.000\n1,0.25,2.500\n");
    h.mpsnr = {20.0, 21.5};
    CHECK(history_csv(h, false) == "iteration,energy,mpsnr\n0,0.5,20\n1,0.25,21.5\n");
  }
}
