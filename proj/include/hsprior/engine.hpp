#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsprior/adam.hpp"
#include "hsprior/cube.hpp"
#include "hsprior/ndarray.hpp"
#include "hsprior/net.hpp"

namespace hsprior {

enum class Task { denoise, inpaint, superres };

struct StopPolicy {
  enum class Kind { fixed_iters, patience };
  Kind kind = Kind::fixed_iters;
  /// Patience: stop once the best energy of the last `window` iterations
  /// improves on the energy `window` iterations back by less than `min_delta`.
  std::size_t window = 200;
  double min_delta = 0.0;
};

/// One restoration job.
struct TaskConfig {
  Task task = Task::denoise;
  ArchSpec arch;  ///< input_shape may be left zero; restore() fills it in
  std::size_t iters = 3000;
  AdamOptions adam;
  std::uint64_t seed = 0;
  double input_noise_range = 0.1;  ///< z ~ U[0, b]
  double perturb_sigma = 0.0;
  std::size_t sr_factor = 0;  ///< required for superres, must stay 0 otherwise
  StopPolicy stop;

  /// Stock settings for a task: default architecture for `variant` and the
  /// default iteration budget of the task.
  static TaskConfig defaults(Task task, Variant variant = Variant::conv2d);
  void validate() const;
};

struct RunHistory {
  std::vector<double> energy;
  std::vector<double> mpsnr;   ///< filled only when a reference cube is given
  std::vector<double> millis;  ///< wall-clock per iteration
  std::size_t best_iteration = 0;

  std::size_t size() const noexcept { return energy.size(); }
};

struct RestoreResult {
  HyperCube restored;
  RunHistory history;
};

/// Called after every iteration with (iteration, energy).
using ProgressFn = std::function<void(std::size_t, double)>;

/// i.i.d. U[0, b] array; deterministic per seed.
NdArray make_input_noise(const Shape& shape, std::uint64_t seed, double b);
/// z + N(0, sigma^2); returns z unchanged for sigma = 0.
NdArray perturb_input(const NdArray& z, double sigma, std::uint64_t seed);

enum class StopDecision { proceed, stop };
StopDecision check_stop(const RunHistory& history, const StopPolicy& policy, std::size_t budget);

/// Optimizes a freshly initialized network so that its output, degraded for
/// the task, matches `x0`; returns the output of the lowest-energy iterate.
/// For superres `x0` is the low-resolution cube and the result is
/// `sr_factor` times larger spatially. `mask` is required for inpainting only;
/// `reference` (same shape as the result) adds per-iteration MPSNR.
RestoreResult restore(const TaskConfig& config, const HyperCube& x0, const Mask* mask = nullptr,
                      const HyperCube* reference = nullptr, const ProgressFn& progress = {});

/// "iteration,energy[,mpsnr][,millis]" lines.
std::string history_csv(const RunHistory& history, bool with_timing);

const char* task_name(Task task);

}  // namespace hsprior
