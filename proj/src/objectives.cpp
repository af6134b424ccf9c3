#include "hsprior/objectives.hpp"

#include <algorithm>
#include <memory>
#include <span>
#include <string>

#include "hsprior/error.hpp"

namespace hsprior {

namespace {

double mean_squared(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

std::size_t count_observed(std::span<const double> m) {
  const auto n = static_cast<std::size_t>(std::count(m.begin(), m.end(), 1.0));
  if (n == 0) throw Error("mask: no observed values, the energy constrains nothing");
  return n;
}

double masked_mean_squared(std::span<const double> a, std::span<const double> b, std::span<const double> m,
                           std::size_t observed) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (m[i] == 0.0) continue;
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total / static_cast<double>(observed);
}

void check_block_extents(std::size_t rows, std::size_t cols, std::size_t alpha) {
  if (alpha == 0) throw ShapeError("alpha", "downsampling factor must be positive");
  if (rows % alpha != 0) {
    throw ShapeError("rows", std::to_string(rows) + " is not divisible by factor " + std::to_string(alpha));
  }
  if (cols % alpha != 0) {
    throw ShapeError("cols", std::to_string(cols) + " is not divisible by factor " + std::to_string(alpha));
  }
}

/// src is [bands, rows, cols]; dst is [bands, rows/alpha, cols/alpha].
void block_average(const double* src, double* dst, std::size_t bands, std::size_t rows, std::size_t cols,
                   std::size_t alpha) {
  const std::size_t out_rows = rows / alpha;
  const std::size_t out_cols = cols / alpha;
  const double norm = 1.0 / static_cast<double>(alpha * alpha);
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t i = 0; i < out_rows; ++i) {
      for (std::size_t j = 0; j < out_cols; ++j) {
        double total = 0.0;
        for (std::size_t di = 0; di < alpha; ++di) {
          const double* line = src + (b * rows + i * alpha + di) * cols + j * alpha;
          for (std::size_t dj = 0; dj < alpha; ++dj) total += line[dj];
        }
        dst[(b * out_rows + i) * out_cols + j] = total * norm;
      }
    }
  }
}

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(what, to_string(a) + " vs " + to_string(b));
}

class L2EnergyOp final : public Op {
 public:
  std::string_view name() const override { return "energy_l2"; }
  Shape output_shape(std::span<const Shape> in) const override {
    require_same(in[0], in[1], "energy_l2 operands");
    return {1};
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    out[0] = mean_squared(in[0]->values(), in[1]->values());
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    const NdArray& x = *in[0];
    const NdArray& t = *in[1];
    const double k = 2.0 * g[0] / static_cast<double>(x.size());
    if (grads[0] != nullptr) {
      for (std::size_t i = 0; i < x.size(); ++i) (*grads[0])[i] += k * (x[i] - t[i]);
    }
    if (grads[1] != nullptr) {
      for (std::size_t i = 0; i < x.size(); ++i) (*grads[1])[i] -= k * (x[i] - t[i]);
    }
  }
};

class MaskedEnergyOp final : public Op {
 public:
  std::string_view name() const override { return "energy_masked"; }
  Shape output_shape(std::span<const Shape> in) const override {
    require_same(in[0], in[1], "energy_masked operands");
    require_same(in[0], in[2], "energy_masked mask");
    return {1};
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    observed_ = count_observed(in[2]->values());
    out[0] = masked_mean_squared(in[0]->values(), in[1]->values(), in[2]->values(), observed_);
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    const NdArray& x = *in[0];
    const NdArray& t = *in[1];
    const NdArray& m = *in[2];
    const double k = 2.0 * g[0] / static_cast<double>(observed_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (m[i] == 0.0) continue;
      if (grads[0] != nullptr) (*grads[0])[i] += k * (x[i] - t[i]);
      if (grads[1] != nullptr) (*grads[1])[i] -= k * (x[i] - t[i]);
    }
  }

 private:
  std::size_t observed_ = 1;
};

class BlockDownsampleOp final : public Op {
 public:
  explicit BlockDownsampleOp(std::size_t alpha) : alpha_(alpha) {}
  std::string_view name() const override { return "block_downsample"; }
  Shape output_shape(std::span<const Shape> in) const override {
    if (in[0].size() != 3) throw ShapeError("rank", "block downsampling needs [C,H,W], got " + to_string(in[0]));
    check_block_extents(in[0][1], in[0][2], alpha_);
    return {in[0][0], in[0][1] / alpha_, in[0][2] / alpha_};
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    const Shape& s = in[0]->shape();
    block_average(in[0]->data(), out.data(), s[0], s[1], s[2], alpha_);
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    const Shape& s = in[0]->shape();
    const std::size_t rows = s[1], cols = s[2];
    const std::size_t out_rows = rows / alpha_, out_cols = cols / alpha_;
    const double norm = 1.0 / static_cast<double>(alpha_ * alpha_);
    NdArray& gx = *grads[0];
    for (std::size_t b = 0; b < s[0]; ++b) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          gx[(b * rows + r) * cols + c] += norm * g[(b * out_rows + r / alpha_) * out_cols + c / alpha_];
        }
      }
    }
  }

 private:
  std::size_t alpha_;
};

}  // namespace

double energy_l2(const HyperCube& x, const HyperCube& x0) {
  require_same_shape(x, x0, "energy_l2");
  return mean_squared(x.values(), x0.values());
}

double energy_masked(const HyperCube& x, const HyperCube& x0, const Mask& m) {
  require_same_shape(x, x0, "energy_masked");
  require_same_shape(x, m.cube(), "energy_masked mask");
  const std::size_t observed = count_observed(m.cube().values());
  return masked_mean_squared(x.values(), x0.values(), m.cube().values(), observed);
}

HyperCube degrade_downsample(const HyperCube& x, std::size_t alpha) {
  check_block_extents(x.rows(), x.cols(), alpha);
  HyperCube out(x.rows() / alpha, x.cols() / alpha, x.bands());
  block_average(x.values().data(), out.values().data(), x.bands(), x.rows(), x.cols(), alpha);
  return out;
}

double energy_sr(const HyperCube& x, const HyperCube& x0_lowres, std::size_t alpha) {
  const HyperCube reduced = degrade_downsample(x, alpha);
  require_same_shape(reduced, x0_lowres, "energy_sr (downsampled estimate vs observation)");
  return mean_squared(reduced.values(), x0_lowres.values());
}

NodeId l2_energy(Tape& tape, NodeId x, NodeId target) {
  return tape.apply(std::make_unique<L2EnergyOp>(), {x, target});
}

NodeId masked_energy(Tape& tape, NodeId x, NodeId target, NodeId mask) {
  return tape.apply(std::make_unique<MaskedEnergyOp>(), {x, target, mask});
}

NodeId block_downsample(Tape& tape, NodeId x, std::size_t alpha) {
  return tape.apply(std::make_unique<BlockDownsampleOp>(alpha), {x});
}

NodeId sr_energy(Tape& tape, NodeId x, NodeId target_lowres, std::size_t alpha) {
  return l2_energy(tape, block_downsample(tape, x, alpha), target_lowres);
}

}  // namespace hsprior
