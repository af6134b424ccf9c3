#include "hsprior/adam.hpp"

#include <cmath>
#include <string>

#include "hsprior/error.hpp"

namespace hsprior {

void AdamOptions::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
}

AdamState::AdamState(AdamOptions opts, std::span<const NdArray> params) : options(opts) {
  options.validate();
  for (const NdArray& p : params) {
    m.emplace_back(p.shape());
    v.emplace_back(p.shape());
  }
}

void adam_step(AdamState& state, std::span<NdArray* const> params, std::span<const NdArray> grads,
               std::span<const std::string> names) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("parameters", std::to_string(params.size()) + " tensors, " + std::to_string(grads.size()) +
                                       " gradients, " + std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = i < names.size() ? names[i] : "parameter " + std::to_string(i);
    if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.m[i].shape()) {
      throw ShapeError(name, "parameter " + to_string(params[i]->shape()) + " vs gradient " +
                                 to_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) throw NonFiniteError(name + ": non-finite gradient");
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    NdArray& p = *params[i];
    NdArray& m = state.m[i];
    NdArray& v = state.v[i];
    const NdArray& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace hsprior
