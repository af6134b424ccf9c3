#include "hsprior/net.hpp"

#include <cmath>
#include <string>

#include "hsprior/error.hpp"

namespace hsprior {

ArchSpec ArchSpec::defaults(Variant variant, CubeShape shape) {
  ArchSpec spec;
  spec.variant = variant;
  spec.input_shape = shape;
  if (variant == Variant::conv3d) spec.channels = {4, 8, 16, 32, 32};
  return spec;
}

void ArchSpec::validate() const {
  if (levels == 0) throw ConfigError("levels must be positive");
  if (channels.size() != levels) {
    throw ConfigError("channels lists " + std::to_string(channels.size()) + " widths for " +
                      std::to_string(levels) + " levels");
  }
  for (std::size_t c : channels) {
    if (c == 0) throw ConfigError("channel widths must be positive");
  }
  if (skip.size() != levels) {
    throw ConfigError("skip lists " + std::to_string(skip.size()) + " flags for " + std::to_string(levels) +
                      " levels");
  }
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw ConfigError("kernel_size must be a positive odd number, got " + std::to_string(kernel_size));
  }
  if (skip_channels == 0) throw ConfigError("skip_channels must be positive");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
  if (input_shape.rows == 0 || input_shape.cols == 0 || input_shape.bands == 0) {
    throw ShapeError("input_shape", "extents must be positive");
  }
  const std::size_t span = std::size_t{1} << levels;
  if (input_shape.rows % span != 0) {
    throw ShapeError("rows", std::to_string(input_shape.rows) + " is not divisible by 2^" + std::to_string(levels) +
                                 " as " + std::to_string(levels) + " halvings require");
  }
  if (input_shape.cols % span != 0) {
    throw ShapeError("cols", std::to_string(input_shape.cols) + " is not divisible by 2^" + std::to_string(levels) +
                                 " as " + std::to_string(levels) + " halvings require");
  }
  if (variant == Variant::conv3d && spectral_downsampling == SpectralDownsampling::always &&
      input_shape.bands % span != 0) {
    throw ShapeError("bands", "spectral extent " + std::to_string(input_shape.bands) + " would vanish under " +
                                  std::to_string(levels) + " halvings");
  }
}

Shape ArchSpec::input_array_shape() const {
  if (variant == Variant::conv3d) return {1, input_shape.bands, input_shape.rows, input_shape.cols};
  return {input_shape.bands, input_shape.rows, input_shape.cols};
}

namespace {

class Builder {
 public:
  Builder(const ArchSpec& spec, Network& net) : spec_(spec), net_(net) {}

  /// Convolution + bias with zero-initialized parameters; returns the output node.
  NodeId conv(NodeId x, std::size_t out_channels, std::size_t k, Extent3 stride, const std::string& name) {
    const Shape& in = net_.tape.shape(x);
    const std::size_t in_channels = in[0];
    const bool volumetric = spec_.variant == Variant::conv3d;
    const std::size_t half = k / 2;
    Shape kernel_shape = volumetric ? Shape{out_channels, in_channels, k, k, k} : Shape{out_channels, in_channels, k, k};
    const std::size_t fan_in = element_count(kernel_shape) / out_channels;
    // Uniform He gain for the leaky rectifier keeps activation variance level
    // through the depth of the hourglass.
    const double gain = std::sqrt(6.0 / (1.0 + spec_.leaky_slope * spec_.leaky_slope));
    specs_.push_back({kernel_shape, fan_in, gain});
    specs_.push_back({{out_channels}, fan_in, 1.0});
    const NodeId w = net_.tape.parameter(NdArray(kernel_shape), name + ".weight");
    const NodeId b = net_.tape.parameter(NdArray({out_channels}), name + ".bias");
    last_weight_ = w;
    last_bias_ = b;
    ConvGeometry g;
    g.stride = stride;
    g.pad = volumetric ? Extent3{half, half, half} : Extent3{0, half, half};
    return hsprior::conv(net_.tape, x, w, b, g);
  }

  NodeId act(NodeId x) { return leaky_relu(net_.tape, x, spec_.leaky_slope); }

  const std::vector<ParamSpec>& specs() const { return specs_; }
  NodeId last_weight() const { return last_weight_; }
  NodeId last_bias() const { return last_bias_; }

 private:
  const ArchSpec& spec_;
  Network& net_;
  std::vector<ParamSpec> specs_;
  NodeId last_weight_ = 0;
  NodeId last_bias_ = 0;
};

}  // namespace

Network build_network(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  const bool volumetric = spec.variant == Variant::conv3d;
  const std::size_t k = spec.kernel_size;
  Builder b(spec, net);

  net.input = net.tape.input(spec.input_array_shape(), "z");
  NodeId x = net.input;
  std::size_t depth = volumetric ? spec.input_shape.bands : 1;

  std::vector<NodeId> skips(spec.levels);
  std::vector<Extent3> strides(spec.levels);
  for (std::size_t l = 0; l < spec.levels; ++l) {
    const std::string level = "enc" + std::to_string(l);
    Extent3 stride{1, 2, 2};
    if (volumetric) {
      const bool even = depth % 2 == 0;
      switch (spec.spectral_downsampling) {
        case SpectralDownsampling::adaptive:
          stride.depth = even ? 2 : 1;
          break;
        case SpectralDownsampling::always:
          if (!even) throw ShapeError("bands", "spectral extent " + std::to_string(depth) + " cannot be halved at level " + std::to_string(l));
          stride.depth = 2;
          break;
        case SpectralDownsampling::never:
          break;
      }
      depth /= stride.depth;
    }
    strides[l] = stride;
    if (spec.skip[l]) {
      skips[l] = b.act(b.conv(x, spec.skip_channels, 1, {1, 1, 1}, "skip" + std::to_string(l)));
    }
    x = b.act(b.conv(x, spec.channels[l], k, stride, level + ".down"));
    x = b.act(b.conv(x, spec.channels[l], k, {1, 1, 1}, level + ".conv"));
  }

  for (std::size_t l = spec.levels; l-- > 0;) {
    const std::string level = "dec" + std::to_string(l);
    x = upsample(net.tape, x, strides[l], spec.upsample_mode);
    if (spec.skip[l]) x = concat(net.tape, {skips[l], x});
    x = b.act(b.conv(x, spec.channels[l], k, {1, 1, 1}, level + ".conv"));
    x = b.act(b.conv(x, spec.channels[l], 1, {1, 1, 1}, level + ".mix"));
  }

  const std::size_t out_channels = volumetric ? 1 : spec.input_shape.bands;
  x = b.conv(x, out_channels, 1, {1, 1, 1}, "out");
  net.final_weight = b.last_weight();
  net.final_bias = b.last_bias();
  x = sigmoid(net.tape, x);
  if (volumetric) x = reshape(net.tape, x, {spec.input_shape.bands, spec.input_shape.rows, spec.input_shape.cols});
  net.output = x;

  const std::vector<NdArray> values = init_params(seed, b.specs());
  const auto params = net.tape.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) net.tape.parameter_value(params[i]) = values[i];
  net.tape.forward();
  return net;
}

const NdArray& forward(Network& net, const NdArray& z) {
  net.tape.set_value(net.input, z);
  net.tape.forward();
  return net.tape.value(net.output);
}

}  // namespace hsprior
