#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hsprior/ndarray.hpp"
#include "hsprior/tape.hpp"

namespace hsprior {

/// Per-axis sizes over the convolved dimensions (depth, height, width).
/// Rank-3 feature maps [C, H, W] have no depth axis; depth entries must stay
/// at their neutral values there.
struct Extent3 {
  std::size_t depth = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  friend bool operator==(const Extent3&, const Extent3&) = default;
};

struct ConvGeometry {
  Extent3 stride{1, 1, 1};
  Extent3 pad{0, 0, 0};  ///< reflection padding on both sides
};

enum class UpsampleMode { nearest, linear };

/// Reflects index `i` into [0, n) without repeating the edge sample
/// (... 2 1 | 0 1 2 ... n-1 | n-2 ...). A single-sample axis maps everything to 0.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

// Direct evaluation on arrays. Feature maps are [C, H, W] (2D) or [C, D, H, W]
// (3D); kernels are [Cout, Cin, kh, kw] or [Cout, Cin, kd, kh, kw].

NdArray conv_forward(const NdArray& input, const NdArray& kernel, const ConvGeometry& geometry,
                     const NdArray* bias = nullptr);
NdArray leaky_relu(const NdArray& x, double slope);
NdArray upsample(const NdArray& x, Extent3 factor, UpsampleMode mode);

// Graph builders. Each returns the new node id.

NodeId conv(Tape& tape, NodeId input, NodeId kernel, std::optional<NodeId> bias, const ConvGeometry& geometry);
NodeId leaky_relu(Tape& tape, NodeId x, double slope);
NodeId sigmoid(Tape& tape, NodeId x);
NodeId upsample(Tape& tape, NodeId x, Extent3 factor, UpsampleMode mode);
/// Concatenation along axis 0 (channels).
NodeId concat(Tape& tape, std::vector<NodeId> parts);
NodeId reshape(Tape& tape, NodeId x, Shape shape);
NodeId sum(Tape& tape, NodeId x);
NodeId multiply(Tape& tape, NodeId a, NodeId b);
NodeId scale(Tape& tape, NodeId x, double factor);

/// Shape and fan-in of one trainable tensor.
struct ParamSpec {
  Shape shape;
  std::size_t fan_in = 1;
  double gain = 1.0;
};

/// Draws every tensor from U(-gain/sqrt(fan_in), gain/sqrt(fan_in)) using one
/// generator seeded with `seed`, in the order given.
std::vector<NdArray> init_params(std::uint64_t seed, std::span<const ParamSpec> layers);

}  // namespace hsprior
