#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hsprior/ndarray.hpp"
#include "hsprior/ops.hpp"
#include "hsprior/tape.hpp"

namespace hsprior {

enum class Variant {
  conv2d,  ///< bands are channels; the first layer spans every band
  conv3d,  ///< the cube is a single-channel volume convolved with small cubic kernels
};

/// How the 3D variant treats the spectral axis when a level downsamples.
enum class SpectralDownsampling {
  adaptive,  ///< halve the band extent whenever it is even, otherwise keep it
  always,    ///< halve at every level; the band count must divide by 2^levels
  never,
};

struct CubeShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bands = 0;

  friend bool operator==(const CubeShape&, const CubeShape&) = default;
};

/// Hourglass encoder-decoder description.
struct ArchSpec {
  Variant variant = Variant::conv2d;
  std::size_t levels = 5;
  std::vector<std::size_t> channels{16, 32, 64, 128, 128};
  std::size_t kernel_size = 3;
  std::vector<bool> skip{true, true, true, true, true};
  std::size_t skip_channels = 4;
  UpsampleMode upsample_mode = UpsampleMode::linear;
  double leaky_slope = 0.1;
  SpectralDownsampling spectral_downsampling = SpectralDownsampling::adaptive;
  CubeShape input_shape{};

  /// The stock architecture for `variant`.
  static ArchSpec defaults(Variant variant, CubeShape shape = {});

  /// Throws ConfigError or ShapeError naming the first violated constraint.
  void validate() const;
  /// Extents of the network input z: [C, H, W] (2D) or [1, C, H, W] (3D).
  Shape input_array_shape() const;
};

/// A built network: the tape plus the node ids callers need.
struct Network {
  ArchSpec spec;
  Tape tape;
  NodeId input = 0;
  NodeId output = 0;  ///< [C, H, W], squashed into (0, 1)
  NodeId final_weight = 0;
  NodeId final_bias = 0;
};

/// Builds the hourglass for `spec` with parameters drawn from `seed`.
Network build_network(const ArchSpec& spec, std::uint64_t seed);

/// Sets z as the network input, re-evaluates the tape and returns the output.
const NdArray& forward(Network& net, const NdArray& z);

}  // namespace hsprior
