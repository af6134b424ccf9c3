#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hsprior/ndarray.hpp"

namespace hsprior {

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws ConfigError for out-of-range hyperparameters.
  void validate() const;
};

/// Moment estimates for a list of parameter tensors.
struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<NdArray> m;
  std::vector<NdArray> v;

  AdamState() = default;
  /// Zero moments shaped like `params`.
  AdamState(AdamOptions opts, std::span<const NdArray> params);
};

/// One bias-corrected ADAM update, in place. Gradients are checked for
/// finiteness first; on failure nothing is modified and NonFiniteError names
/// the parameter (by `names[i]` when provided, else by index).
void adam_step(AdamState& state, std::span<NdArray* const> params, std::span<const NdArray> grads,
               std::span<const std::string> names = {});

}  // namespace hsprior
