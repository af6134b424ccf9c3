#include "hsprior/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "hsprior/error.hpp"
#include "hsprior/random.hpp"

namespace hsprior {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

namespace {

/// Channel count plus (depth, height, width) of a rank-3 or rank-4 map.
struct MapDims {
  std::size_t channels;
  Extent3 extent;
  bool volumetric;

  std::size_t voxels() const { return extent.depth * extent.height * extent.width; }
};

MapDims map_dims(const Shape& s, const char* what) {
  if (s.size() == 3) return {s[0], {1, s[1], s[2]}, false};
  if (s.size() == 4) return {s[0], {s[1], s[2], s[3]}, true};
  throw ShapeError(what, "expected rank 3 [C,H,W] or rank 4 [C,D,H,W], got " + to_string(s));
}

Shape make_shape(std::size_t channels, Extent3 e, bool volumetric) {
  if (volumetric) return {channels, e.depth, e.height, e.width};
  return {channels, e.height, e.width};
}

/// table[k * out + o] = source index along one axis for kernel tap k and output o.
std::vector<std::size_t> tap_table(std::size_t in, std::size_t k, std::size_t out, std::size_t stride,
                                   std::size_t pad) {
  std::vector<std::size_t> table(k * out);
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t o = 0; o < out; ++o) {
      const auto pos = static_cast<std::ptrdiff_t>(o * stride + t) - static_cast<std::ptrdiff_t>(pad);
      table[t * out + o] = reflect_index(pos, in);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Convolution (cross-correlation) via im2col and a dense product.

class ConvOp final : public Op {
 public:
  explicit ConvOp(ConvGeometry g) : geometry_(g) {}

  std::string_view name() const override { return "conv"; }

  Shape output_shape(std::span<const Shape> in) const override {
    if (in.size() != 2 && in.size() != 3) throw ShapeError("conv", "expects input, kernel and optional bias");
    const MapDims x = map_dims(in[0], "conv input");
    const Shape& k = in[1];
    const std::size_t kernel_rank = x.volumetric ? 5 : 4;
    if (k.size() != kernel_rank) {
      throw ShapeError("kernel rank", "expected rank " + std::to_string(kernel_rank) + " kernel for input " +
                                          to_string(in[0]) + ", got " + to_string(k));
    }
    if (k[1] != x.channels) {
      throw ShapeError("input channels", "kernel expects " + std::to_string(k[1]) + ", input has " +
                                             std::to_string(x.channels));
    }
    if (!x.volumetric && (geometry_.stride.depth != 1 || geometry_.pad.depth != 0)) {
      throw ShapeError("depth", "rank-3 input cannot use depth stride or padding");
    }
    const Extent3 kext = x.volumetric ? Extent3{k[2], k[3], k[4]} : Extent3{1, k[2], k[3]};
    const Extent3 out{axis_out("depth", x.extent.depth, kext.depth, geometry_.stride.depth, geometry_.pad.depth),
                      axis_out("height", x.extent.height, kext.height, geometry_.stride.height, geometry_.pad.height),
                      axis_out("width", x.extent.width, kext.width, geometry_.stride.width, geometry_.pad.width)};
    if (in.size() == 3 && in[2] != Shape{k[0]}) {
      throw ShapeError("bias", "expected [" + std::to_string(k[0]) + "], got " + to_string(in[2]));
    }
    return make_shape(k[0], out, x.volumetric);
  }

  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    const NdArray& x = *in[0];
    const NdArray& k = *in[1];
    prepare(x.shape(), k.shape(), out.shape());

    const auto cout = static_cast<Eigen::Index>(k.extent(0));
    const auto npix = static_cast<Eigen::Index>(out_voxels_);
    const auto rows = static_cast<Eigen::Index>(rows_);
    ConstRowMap kernel(k.data(), cout, rows);
    RowMap result(out.data(), cout, npix);
    if (pointwise_) {
      result.noalias() = kernel * ConstRowMap(x.data(), rows, npix);
    } else {
      for (std::size_t l0 = 0; l0 < lines_; l0 += chunk_lines_) {
        const std::size_t l1 = std::min(lines_, l0 + chunk_lines_);
        const auto n = static_cast<Eigen::Index>((l1 - l0) * out_.width);
        im2col(x, l0, l1);
        result.middleCols(static_cast<Eigen::Index>(l0 * out_.width), n).noalias() =
            kernel * ConstRowMap(columns_.data(), rows, n);
      }
    }
    if (in.size() == 3) {
      const NdArray& b = *in[2];
      for (Eigen::Index c = 0; c < cout; ++c) result.row(c).array() += b[static_cast<std::size_t>(c)];
    }
  }

  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    const NdArray& x = *in[0];
    const NdArray& k = *in[1];
    const auto cout = static_cast<Eigen::Index>(k.extent(0));
    const auto npix = static_cast<Eigen::Index>(out_voxels_);
    const auto rows = static_cast<Eigen::Index>(rows_);
    ConstRowMap grad_out(g.data(), cout, npix);
    ConstRowMap kernel(k.data(), cout, rows);

    if (in.size() == 3 && grads[2] != nullptr) {
      NdArray& gb = *grads[2];
      for (Eigen::Index c = 0; c < cout; ++c) gb[static_cast<std::size_t>(c)] += grad_out.row(c).sum();
    }
    if (pointwise_) {
      if (grads[1] != nullptr) {
        RowMap(grads[1]->data(), cout, rows).noalias() += grad_out * ConstRowMap(x.data(), rows, npix).transpose();
      }
      if (grads[0] != nullptr) RowMap(grads[0]->data(), rows, npix).noalias() += kernel.transpose() * grad_out;
      return;
    }
    // Same line chunks as the forward pass; the columns are rebuilt per chunk.
    for (std::size_t l0 = 0; l0 < lines_; l0 += chunk_lines_) {
      const std::size_t l1 = std::min(lines_, l0 + chunk_lines_);
      const auto n = static_cast<Eigen::Index>((l1 - l0) * out_.width);
      const auto grad_chunk = grad_out.middleCols(static_cast<Eigen::Index>(l0 * out_.width), n);
      if (grads[1] != nullptr) {
        im2col(x, l0, l1);
        RowMap(grads[1]->data(), cout, rows).noalias() += grad_chunk * ConstRowMap(columns_.data(), rows, n).transpose();
      }
      if (grads[0] != nullptr) {
        RowMap(grad_columns_.data(), rows, n).noalias() = kernel.transpose() * grad_chunk;
        col2im(*grads[0], l0, l1);
      }
    }
  }

 private:
  static std::size_t axis_out(const char* axis, std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    if (stride == 0) throw ShapeError(axis, "stride must be positive");
    if (k > in + 2 * pad) {
      throw ShapeError(std::string("kernel ") + axis, "kernel extent " + std::to_string(k) +
                                                          " exceeds padded input extent " +
                                                          std::to_string(in + 2 * pad));
    }
    return (in + 2 * pad - k) / stride + 1;
  }

  void prepare(const Shape& xs, const Shape& ks, const Shape& os) {
    if (xs == cached_input_ && ks == cached_kernel_) return;
    cached_input_ = xs;
    cached_kernel_ = ks;
    const MapDims x = map_dims(xs, "conv input");
    const MapDims o = map_dims(os, "conv output");
    in_ = x.extent;
    in_channels_ = x.channels;
    kext_ = x.volumetric ? Extent3{ks[2], ks[3], ks[4]} : Extent3{1, ks[2], ks[3]};
    out_ = o.extent;
    out_voxels_ = o.voxels();
    rows_ = x.channels * kext_.depth * kext_.height * kext_.width;
    pointwise_ = kext_ == Extent3{1, 1, 1} && geometry_.stride == Extent3{1, 1, 1} && geometry_.pad == Extent3{0, 0, 0};
    tap_d_ = tap_table(in_.depth, kext_.depth, out_.depth, geometry_.stride.depth, geometry_.pad.depth);
    tap_h_ = tap_table(in_.height, kext_.height, out_.height, geometry_.stride.height, geometry_.pad.height);
    tap_w_ = tap_table(in_.width, kext_.width, out_.width, geometry_.stride.width, geometry_.pad.width);
    // Per width tap, the output range whose sources are unreflected: there
    // tw[i] = tw[lo] + (i - lo) * stride, so the copy needs no table lookups.
    run_lo_.assign(kext_.width, 0);
    run_hi_.assign(kext_.width, 0);
    for (std::size_t e = 0; e < kext_.width; ++e) {
      std::size_t lo = 0;
      while (lo < out_.width && lo * geometry_.stride.width + e < geometry_.pad.width) ++lo;
      std::size_t hi = lo;
      while (hi < out_.width && hi * geometry_.stride.width + e - geometry_.pad.width < in_.width) ++hi;
      run_lo_[e] = lo;
      run_hi_[e] = hi;
    }
    lines_ = out_.depth * out_.height;
    if (!pointwise_) {
      // Column buffers cover whole output lines and stay around 1 MiB.
      constexpr std::size_t kChunkValues = std::size_t{1} << 17;
      chunk_lines_ = std::clamp<std::size_t>(kChunkValues / (rows_ * out_.width), 1, lines_);
      columns_.assign(rows_ * chunk_lines_ * out_.width, 0.0);
      grad_columns_.assign(rows_ * chunk_lines_ * out_.width, 0.0);
    }
  }

  /// Calls visit(row, pix, base, e) for every kernel row and every output
  /// line in [l0, l1); pix is relative to the first pixel of line l0 and e is
  /// the width tap.
  template <typename Visit>
  void for_each_tap(std::size_t l0, std::size_t l1, Visit&& visit) const {
    std::size_t row = 0;
    for (std::size_t c = 0; c < in_channels_; ++c) {
      for (std::size_t a = 0; a < kext_.depth; ++a) {
        for (std::size_t b = 0; b < kext_.height; ++b) {
          for (std::size_t e = 0; e < kext_.width; ++e, ++row) {
            const std::size_t* td = &tap_d_[a * out_.depth];
            const std::size_t* th = &tap_h_[b * out_.height];
            std::size_t pix = 0;
            for (std::size_t line = l0; line < l1; ++line) {
              const std::size_t od = line / out_.height, oh = line % out_.height;
              const std::size_t base = ((c * in_.depth + td[od]) * in_.height + th[oh]) * in_.width;
              visit(row, pix, base, e);
              pix += out_.width;
            }
          }
        }
      }
    }
  }

  void im2col(const NdArray& x, std::size_t l0, std::size_t l1) {
    const double* src = x.data();
    const std::size_t ow = out_.width;
    const std::size_t stride = (l1 - l0) * ow;
    const std::size_t sw = geometry_.stride.width;
    for_each_tap(l0, l1, [&](std::size_t row, std::size_t pix, std::size_t base, std::size_t e) {
      double* dst = columns_.data() + row * stride + pix;
      const double* line = src + base;
      const std::size_t* tw = &tap_w_[e * ow];
      const std::size_t lo = run_lo_[e], hi = run_hi_[e];
      for (std::size_t i = 0; i < lo; ++i) dst[i] = line[tw[i]];
      if (lo < hi) {
        const double* run = line + tw[lo];
        if (sw == 1) {
          std::copy(run, run + (hi - lo), dst + lo);
        } else {
          for (std::size_t i = lo; i < hi; ++i) dst[i] = run[(i - lo) * sw];
        }
      }
      for (std::size_t i = hi; i < ow; ++i) dst[i] = line[tw[i]];
    });
  }

  void col2im(NdArray& gx, std::size_t l0, std::size_t l1) const {
    double* dst = gx.data();
    const std::size_t ow = out_.width;
    const std::size_t stride = (l1 - l0) * ow;
    const std::size_t sw = geometry_.stride.width;
    for_each_tap(l0, l1, [&](std::size_t row, std::size_t pix, std::size_t base, std::size_t e) {
      const double* src = grad_columns_.data() + row * stride + pix;
      double* line = dst + base;
      const std::size_t* tw = &tap_w_[e * ow];
      const std::size_t lo = run_lo_[e], hi = run_hi_[e];
      for (std::size_t i = 0; i < lo; ++i) line[tw[i]] += src[i];
      if (lo < hi) {
        double* run = line + tw[lo];
        if (sw == 1) {
          for (std::size_t i = lo; i < hi; ++i) run[i - lo] += src[i];
        } else {
          for (std::size_t i = lo; i < hi; ++i) run[(i - lo) * sw] += src[i];
        }
      }
      for (std::size_t i = hi; i < ow; ++i) line[tw[i]] += src[i];
    });
  }

  ConvGeometry geometry_;
  Shape cached_input_;
  Shape cached_kernel_;
  Extent3 in_{}, kext_{}, out_{};
  std::size_t in_channels_ = 0;
  std::size_t out_voxels_ = 0;
  std::size_t rows_ = 0;
  bool pointwise_ = false;
  std::size_t lines_ = 0;
  std::size_t chunk_lines_ = 1;
  std::vector<std::size_t> tap_d_, tap_h_, tap_w_;
  std::vector<std::size_t> run_lo_, run_hi_;
  std::vector<double, AlignedAllocator<double>> columns_;
  std::vector<double, AlignedAllocator<double>> grad_columns_;
};

// ---------------------------------------------------------------------------
// Elementwise activations.

class LeakyReluOp final : public Op {
 public:
  explicit LeakyReluOp(double slope) : slope_(slope) {
    if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu slope must lie in (0, 1)");
  }
  std::string_view name() const override { return "leaky_relu"; }
  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    const NdArray& x = *in[0];
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= 0.0 ? x[i] : slope_ * x[i];
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    const NdArray& x = *in[0];
    NdArray& gx = *grads[0];
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += x[i] >= 0.0 ? g[i] : slope_ * g[i];
  }

 private:
  double slope_;
};

class SigmoidOp final : public Op {
 public:
  std::string_view name() const override { return "sigmoid"; }
  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    const NdArray& x = *in[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= 0.0) {
        out[i] = 1.0 / (1.0 + std::exp(-x[i]));
      } else {
        const double e = std::exp(x[i]);
        out[i] = e / (1.0 + e);
      }
    }
  }
  void backward(std::span<const NdArray* const>, const NdArray& y, const NdArray& g,
                std::span<NdArray* const> grads) override {
    NdArray& gx = *grads[0];
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  }
};

// ---------------------------------------------------------------------------
// Upsampling as a sequence of separable one-axis resampling passes.

struct AxisPass {
  std::size_t outer;  // product of extents before the axis
  std::size_t in;     // axis extent before the pass
  std::size_t out;    // axis extent after the pass
  std::size_t inner;  // product of extents after the axis
  std::vector<std::size_t> lo, hi;
  std::vector<double> w_lo, w_hi;

  void apply(const double* src, double* dst) const {
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < out; ++j) {
        const double* a = src + (o * in + lo[j]) * inner;
        const double* b = src + (o * in + hi[j]) * inner;
        double* d = dst + (o * out + j) * inner;
        if (w_hi[j] == 0.0) {
          std::memcpy(d, a, inner * sizeof(double));
        } else {
          for (std::size_t i = 0; i < inner; ++i) d[i] = w_lo[j] * a[i] + w_hi[j] * b[i];
        }
      }
    }
  }

  void apply_transpose(const double* g, double* gsrc) const {
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < out; ++j) {
        double* a = gsrc + (o * in + lo[j]) * inner;
        double* b = gsrc + (o * in + hi[j]) * inner;
        const double* d = g + (o * out + j) * inner;
        if (w_hi[j] == 0.0) {
          for (std::size_t i = 0; i < inner; ++i) a[i] += d[i];
        } else {
          for (std::size_t i = 0; i < inner; ++i) {
            a[i] += w_lo[j] * d[i];
            b[i] += w_hi[j] * d[i];
          }
        }
      }
    }
  }
};

AxisPass make_pass(std::size_t outer, std::size_t in, std::size_t factor, std::size_t inner, UpsampleMode mode) {
  AxisPass p{outer, in, in * factor, inner, {}, {}, {}, {}};
  p.lo.resize(p.out);
  p.hi.resize(p.out);
  p.w_lo.resize(p.out);
  p.w_hi.resize(p.out);
  for (std::size_t j = 0; j < p.out; ++j) {
    if (mode == UpsampleMode::nearest) {
      p.lo[j] = p.hi[j] = j / factor;
      p.w_lo[j] = 1.0;
      p.w_hi[j] = 0.0;
      continue;
    }
    // Half-pixel centres (align_corners = false), clamped at the borders.
    const double src = std::max((static_cast<double>(j) + 0.5) / static_cast<double>(factor) - 0.5, 0.0);
    const auto i0 = std::min(static_cast<std::size_t>(src), in - 1);
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double frac = i0 == i1 ? 0.0 : src - static_cast<double>(i0);
    p.lo[j] = i0;
    p.hi[j] = i1;
    p.w_lo[j] = 1.0 - frac;
    p.w_hi[j] = frac;
  }
  return p;
}

class UpsampleOp final : public Op {
 public:
  UpsampleOp(Extent3 factor, UpsampleMode mode) : factor_(factor), mode_(mode) {}

  std::string_view name() const override { return "upsample"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const MapDims x = map_dims(in[0], "upsample input");
    if (factor_.depth == 0 || factor_.height == 0 || factor_.width == 0) {
      throw ShapeError("factor", "upsampling factors must be positive");
    }
    if (!x.volumetric && factor_.depth != 1) throw ShapeError("depth", "rank-3 input has no depth axis to upsample");
    return make_shape(x.channels,
                      {x.extent.depth * factor_.depth, x.extent.height * factor_.height, x.extent.width * factor_.width},
                      x.volumetric);
  }

  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    const NdArray& x = *in[0];
    build(x.shape());
    if (passes_.empty()) {
      std::copy(x.values().begin(), x.values().end(), out.values().begin());
      return;
    }
    const double* src = x.data();
    for (std::size_t i = 0; i < passes_.size(); ++i) {
      double* dst = i + 1 == passes_.size() ? out.data() : scratch_[i].data();
      passes_[i].apply(src, dst);
      src = dst;
    }
  }

  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    NdArray& gx = *grads[0];
    if (passes_.empty()) {
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      return;
    }
    (void)in;
    const double* upstream = g.data();
    for (std::size_t i = passes_.size(); i-- > 0;) {
      double* target = i == 0 ? gx.data() : grad_scratch_[i - 1].data();
      if (i > 0) std::fill(grad_scratch_[i - 1].begin(), grad_scratch_[i - 1].end(), 0.0);
      passes_[i].apply_transpose(upstream, target);
      upstream = target;
    }
  }

 private:
  void build(const Shape& s) {
    if (s == built_for_) return;
    built_for_ = s;
    passes_.clear();
    scratch_.clear();
    const MapDims x = map_dims(s, "upsample input");
    std::size_t dims[3] = {x.extent.depth, x.extent.height, x.extent.width};
    const std::size_t factors[3] = {factor_.depth, factor_.height, factor_.width};
    // Width first, then height, then depth.
    for (int axis = 2; axis >= 0; --axis) {
      if (factors[axis] == 1) continue;
      std::size_t outer = x.channels;
      for (int a = 0; a < axis; ++a) outer *= dims[a];
      std::size_t inner = 1;
      for (int a = axis + 1; a < 3; ++a) inner *= dims[a];
      passes_.push_back(make_pass(outer, dims[axis], factors[axis], inner, mode_));
      dims[axis] *= factors[axis];
    }
    for (std::size_t i = 0; i + 1 < passes_.size(); ++i) {
      const AxisPass& p = passes_[i];
      scratch_.emplace_back(p.outer * p.out * p.inner);
    }
    grad_scratch_ = scratch_;
  }

  Extent3 factor_;
  UpsampleMode mode_;
  Shape built_for_;
  std::vector<AxisPass> passes_;
  std::vector<std::vector<double>> scratch_;
  std::vector<std::vector<double>> grad_scratch_;
};

// ---------------------------------------------------------------------------
// Structural and reduction ops.

class ConcatOp final : public Op {
 public:
  std::string_view name() const override { return "concat"; }
  Shape output_shape(std::span<const Shape> in) const override {
    if (in.empty()) throw ShapeError("concat", "needs at least one input");
    Shape out = in[0];
    for (std::size_t i = 1; i < in.size(); ++i) {
      if (in[i].size() != out.size() || !std::equal(in[i].begin() + 1, in[i].end(), out.begin() + 1)) {
        throw ShapeError("concat input " + std::to_string(i),
                         "trailing extents " + to_string(in[i]) + " differ from " + to_string(in[0]));
      }
      out[0] += in[i][0];
    }
    return out;
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    double* dst = out.data();
    for (const NdArray* part : in) dst = std::copy(part->values().begin(), part->values().end(), dst);
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (grads[i] != nullptr) {
        for (std::size_t j = 0; j < in[i]->size(); ++j) (*grads[i])[j] += g[offset + j];
      }
      offset += in[i]->size();
    }
  }
};

class ReshapeOp final : public Op {
 public:
  explicit ReshapeOp(Shape shape) : shape_(std::move(shape)) {}
  std::string_view name() const override { return "reshape"; }
  Shape output_shape(std::span<const Shape> in) const override {
    if (element_count(in[0]) != element_count(shape_)) {
      throw ShapeError("reshape", "cannot view " + to_string(in[0]) + " as " + to_string(shape_));
    }
    return shape_;
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    std::copy(in[0]->values().begin(), in[0]->values().end(), out.data());
  }
  void backward(std::span<const NdArray* const>, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    NdArray& gx = *grads[0];
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  }

 private:
  Shape shape_;
};

class SumOp final : public Op {
 public:
  std::string_view name() const override { return "sum"; }
  Shape output_shape(std::span<const Shape>) const override { return {1}; }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    double total = 0.0;
    for (double v : in[0]->values()) total += v;
    out[0] = total;
  }
  void backward(std::span<const NdArray* const>, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    for (double& v : grads[0]->values()) v += g[0];
  }
};

class MultiplyOp final : public Op {
 public:
  std::string_view name() const override { return "multiply"; }
  Shape output_shape(std::span<const Shape> in) const override {
    if (in[0] != in[1]) throw ShapeError("multiply", to_string(in[0]) + " vs " + to_string(in[1]));
    return in[0];
  }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * (*in[1])[i];
  }
  void backward(std::span<const NdArray* const> in, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    if (grads[0] != nullptr) {
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * (*in[1])[i];
    }
    if (grads[1] != nullptr) {
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] += g[i] * (*in[0])[i];
    }
  }
};

class ScaleOp final : public Op {
 public:
  explicit ScaleOp(double factor) : factor_(factor) {}
  std::string_view name() const override { return "scale"; }
  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
  void forward(std::span<const NdArray* const> in, NdArray& out) override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor_ * (*in[0])[i];
  }
  void backward(std::span<const NdArray* const>, const NdArray&, const NdArray& g,
                std::span<NdArray* const> grads) override {
    for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += factor_ * g[i];
  }

 private:
  double factor_;
};

/// Runs a single op outside of any graph.
NdArray evaluate(Op& op, std::vector<const NdArray*> inputs) {
  std::vector<Shape> shapes;
  for (const NdArray* x : inputs) shapes.push_back(x->shape());
  NdArray out(op.output_shape(shapes));
  op.forward(inputs, out);
  return out;
}

}  // namespace

NdArray conv_forward(const NdArray& input, const NdArray& kernel, const ConvGeometry& geometry, const NdArray* bias) {
  ConvOp op(geometry);
  std::vector<const NdArray*> in{&input, &kernel};
  if (bias != nullptr) in.push_back(bias);
  return evaluate(op, std::move(in));
}

NdArray leaky_relu(const NdArray& x, double slope) {
  LeakyReluOp op(slope);
  return evaluate(op, {&x});
}

NdArray upsample(const NdArray& x, Extent3 factor, UpsampleMode mode) {
  UpsampleOp op(factor, mode);
  return evaluate(op, {&x});
}

NodeId conv(Tape& tape, NodeId input, NodeId kernel, std::optional<NodeId> bias, const ConvGeometry& geometry) {
  std::vector<NodeId> in{input, kernel};
  if (bias) in.push_back(*bias);
  return tape.apply(std::make_unique<ConvOp>(geometry), std::move(in));
}

NodeId leaky_relu(Tape& tape, NodeId x, double slope) {
  return tape.apply(std::make_unique<LeakyReluOp>(slope), {x});
}

NodeId sigmoid(Tape& tape, NodeId x) { return tape.apply(std::make_unique<SigmoidOp>(), {x}); }

NodeId upsample(Tape& tape, NodeId x, Extent3 factor, UpsampleMode mode) {
  return tape.apply(std::make_unique<UpsampleOp>(factor, mode), {x});
}

NodeId concat(Tape& tape, std::vector<NodeId> parts) {
  return tape.apply(std::make_unique<ConcatOp>(), std::move(parts));
}

NodeId reshape(Tape& tape, NodeId x, Shape shape) {
  return tape.apply(std::make_unique<ReshapeOp>(std::move(shape)), {x});
}

NodeId sum(Tape& tape, NodeId x) { return tape.apply(std::make_unique<SumOp>(), {x}); }

NodeId multiply(Tape& tape, NodeId a, NodeId b) { return tape.apply(std::make_unique<MultiplyOp>(), {a, b}); }

NodeId scale(Tape& tape, NodeId x, double factor) { return tape.apply(std::make_unique<ScaleOp>(factor), {x}); }

std::vector<NdArray> init_params(std::uint64_t seed, std::span<const ParamSpec> layers) {
  Rng rng(seed);
  std::vector<NdArray> out;
  out.reserve(layers.size());
  for (const ParamSpec& layer : layers) {
    const double bound = layer.gain / std::sqrt(static_cast<double>(std::max<std::size_t>(layer.fan_in, 1)));
    NdArray values(layer.shape);
    for (double& v : values.values()) v = bound * (2.0 * rng.uniform() - 1.0);
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace hsprior
