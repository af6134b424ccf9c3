#include "hsprior/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hsprior/error.hpp"
#include "hsprior/metrics.hpp"
#include "hsprior/objectives.hpp"
#include "hsprior/random.hpp"

namespace hsprior {

namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kPerturbStream = 2;

}  // namespace

const char* task_name(Task task) {
  switch (task) {
    case Task::denoise:
      return "denoise";
    case Task::inpaint:
      return "inpaint";
    case Task::superres:
      return "superres";
  }
  return "?";
}

TaskConfig TaskConfig::defaults(Task task, Variant variant) {
  TaskConfig config;
  config.task = task;
  config.arch = ArchSpec::defaults(variant);
  switch (task) {
    case Task::denoise:
      config.iters = 3000;
      break;
    case Task::inpaint:
      config.iters = 5000;
      break;
    case Task::superres:
      config.iters = 2000;
      config.sr_factor = 2;
      break;
  }
  return config;
}

void TaskConfig::validate() const {
  if (iters == 0) throw ConfigError("iters must be positive");
  adam.validate();
  if (!(input_noise_range > 0.0) || !std::isfinite(input_noise_range)) {
    throw ConfigError("input noise range must be positive");
  }
  if (!(perturb_sigma >= 0.0) || !std::isfinite(perturb_sigma)) {
    throw ConfigError("perturb_sigma must be non-negative");
  }
  if (task == Task::superres && sr_factor == 0) throw ConfigError("superres needs a positive sr_factor");
  if (task != Task::superres && sr_factor != 0) {
    throw ConfigError(std::string("sr_factor is only meaningful for superres, not ") + task_name(task));
  }
  if (stop.kind == StopPolicy::Kind::patience && stop.window == 0) {
    throw ConfigError("patience window must be positive");
  }
}

NdArray make_input_noise(const Shape& shape, std::uint64_t seed, double b) {
  if (!(b > 0.0)) throw ConfigError("input noise range must be positive");
  NdArray z(shape);
  Rng rng(seed);
  for (double& v : z.values()) v = b * rng.uniform();
  return z;
}

NdArray perturb_input(const NdArray& z, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("perturbation sigma must be non-negative");
  NdArray out = z;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.values()) v += sigma * rng.normal();
  return out;
}

StopDecision check_stop(const RunHistory& history, const StopPolicy& policy, std::size_t budget) {
  if (history.size() == 0) throw Error("check_stop needs a non-empty history");
  if (history.size() >= budget) return StopDecision::stop;
  if (policy.kind == StopPolicy::Kind::patience && history.size() > policy.window) {
    const auto& e = history.energy;
    const double before = e[e.size() - 1 - policy.window];
    const double recent = *std::min_element(e.end() - static_cast<std::ptrdiff_t>(policy.window), e.end());
    if (before - recent < policy.min_delta || before - recent <= 0.0) return StopDecision::stop;
  }
  return StopDecision::proceed;
}

RestoreResult restore(const TaskConfig& config, const HyperCube& x0, const Mask* mask, const HyperCube* reference,
                      const ProgressFn& progress) {
  config.validate();
  if (!x0.in_unit_range()) throw Error("observation values must lie in [0, 1]");
  if (config.task == Task::inpaint && mask == nullptr) throw ConfigError("inpainting needs a mask");
  if (config.task != Task::inpaint && mask != nullptr) {
    throw ConfigError(std::string("a mask is only used for inpainting, not ") + task_name(config.task));
  }

  const std::size_t factor = config.task == Task::superres ? config.sr_factor : 1;
  const CubeShape out_shape{x0.rows() * factor, x0.cols() * factor, x0.bands()};
  ArchSpec arch = config.arch;
  if (arch.input_shape == CubeShape{}) {
    arch.input_shape = out_shape;
  } else if (arch.input_shape != out_shape) {
    throw ShapeError("input_shape", "architecture expects " + std::to_string(arch.input_shape.rows) + "x" +
                                        std::to_string(arch.input_shape.cols) + "x" +
                                        std::to_string(arch.input_shape.bands) + " but the task needs " +
                                        std::to_string(out_shape.rows) + "x" + std::to_string(out_shape.cols) + "x" +
                                        std::to_string(out_shape.bands));
  }
  if (reference != nullptr && (reference->rows() != out_shape.rows || reference->cols() != out_shape.cols ||
                               reference->bands() != out_shape.bands)) {
    throw ShapeError("reference", "reference cube must match the restored cube's shape");
  }

  Network net = build_network(arch, mix_seed(config.seed, kInitStream));
  Tape& tape = net.tape;
  const NodeId target = tape.constant(x0.to_array(), "x0");
  NodeId energy = 0;
  switch (config.task) {
    case Task::denoise:
      energy = l2_energy(tape, net.output, target);
      break;
    case Task::inpaint: {
      require_same_shape(x0, mask->cube(), "mask");
      const NodeId m = tape.constant(mask->cube().to_array(), "mask");
      energy = masked_energy(tape, net.output, target, m);
      break;
    }
    case Task::superres:
      energy = sr_energy(tape, net.output, target, config.sr_factor);
      break;
  }

  const NdArray z = make_input_noise(arch.input_array_shape(), mix_seed(config.seed, kInputStream),
                                     config.input_noise_range);
  const std::uint64_t perturb_seed = mix_seed(config.seed, kPerturbStream);
  tape.set_value(net.input, z);

  std::vector<NdArray*> params;
  std::vector<std::string> names;
  for (NodeId p : tape.parameters()) {
    params.push_back(&tape.parameter_value(p));
    names.push_back(tape.label(p));
  }
  std::vector<NdArray> initial;
  for (const NdArray* p : params) initial.push_back(*p);
  AdamState adam(config.adam, initial);
  initial.clear();

  RestoreResult result;
  RunHistory& history = result.history;
  NdArray best_output;
  double best_energy = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < config.iters; ++it) {
    const auto start = std::chrono::steady_clock::now();
    if (config.perturb_sigma > 0.0) {
      tape.set_value(net.input, perturb_input(z, config.perturb_sigma, mix_seed(perturb_seed, it)));
    }
    try {
      tape.forward();
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("iteration " + std::to_string(it) + ": " + e.what());
    }
    const double e = tape.value(energy)[0];
    const NdArray& output = tape.value(net.output);
    history.energy.push_back(e);
    if (reference != nullptr) history.mpsnr.push_back(mpsnr(HyperCube::from_array(output), *reference));
    if (e < best_energy) {
      best_energy = e;
      best_output = output;
      history.best_iteration = it;
    }
    const bool done = check_stop(history, config.stop, config.iters) == StopDecision::stop;
    if (!done) {
      const std::vector<NdArray> grads = tape.backward(energy);
      adam_step(adam, params, grads, names);
    }
    history.millis.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    if (progress) progress(it, e);
    if (done) break;
  }

  result.restored = HyperCube::from_array(best_output);
  return result;
}

std::string history_csv(const RunHistory& history, bool with_timing) {
  const bool with_mpsnr = !history.mpsnr.empty();
  std::string out = "iteration,energy";
  if (with_mpsnr) out += ",mpsnr";
  if (with_timing) out += ",millis";
  out += '\n';
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += fmt::format("{},{}", i, history.energy[i]);
    if (with_mpsnr) out += fmt::format(",{}", history.mpsnr[i]);
    if (with_timing) out += fmt::format(",{:.3f}", history.millis[i]);
    out += '\n';
  }
  return out;
}

}  // namespace hsprior
