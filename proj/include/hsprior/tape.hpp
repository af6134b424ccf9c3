#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsprior/ndarray.hpp"

namespace hsprior {

using NodeId = std::size_t;

/// A differentiable operation recorded on a Tape.
///
/// Ops may keep scratch state from `forward` (e.g. an im2col buffer) for use
/// in the matching `backward`, so one Op instance belongs to exactly one node.
class Op {
 public:
  virtual ~Op() = default;

  virtual std::string_view name() const = 0;
  /// Validates input extents and returns the output extents. Throws ShapeError.
  virtual Shape output_shape(std::span<const Shape> inputs) const = 0;
  virtual void forward(std::span<const NdArray* const> inputs, NdArray& output) = 0;
  /// Accumulates (adds) input gradients. `input_grads[i]` is null when input i
  /// needs no gradient.
  virtual void backward(std::span<const NdArray* const> inputs, const NdArray& output, const NdArray& output_grad,
                        std::span<NdArray* const> input_grads) = 0;
};

/// Static reverse-mode computation graph.
///
/// Nodes are appended in topological order: an op node may only consume
/// earlier nodes. The graph is built once and replayed; `forward()`
/// recomputes every op node from the current input and parameter values.
class Tape {
 public:
  Tape() = default;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  /// Placeholder whose value is supplied through `set_value` before `forward`.
  NodeId input(Shape shape, std::string label = {});
  NodeId constant(NdArray value, std::string label = {});
  /// Trainable node; receives a gradient in `backward`.
  NodeId parameter(NdArray value, std::string label = {});
  /// Records `op` applied to `inputs` and evaluates it once.
  NodeId apply(std::unique_ptr<Op> op, std::vector<NodeId> inputs);

  void set_value(NodeId id, NdArray value);
  const NdArray& value(NodeId id) const;
  /// Mutable access to a parameter's storage, used by optimizers.
  NdArray& parameter_value(NodeId id);
  const Shape& shape(NodeId id) const;
  const std::string& label(NodeId id) const;
  bool requires_grad(NodeId id) const;

  /// Re-evaluates every op node in order. Throws NonFiniteError naming the
  /// first op whose output contains NaN or infinity.
  void forward();
  /// Gradients of the scalar node `loss` with respect to every parameter, in
  /// the order of `parameters()`. Requires an up-to-date forward pass.
  std::vector<NdArray> backward(NodeId loss);

  std::span<const NodeId> parameters() const noexcept { return parameters_; }
  std::size_t parameter_count() const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  enum class Kind { input, constant, parameter, op };

  struct Node {
    Kind kind;
    std::unique_ptr<Op> op;
    std::vector<NodeId> inputs;
    NdArray value;
    std::string label;
    bool requires_grad = false;
  };

  const Node& node(NodeId id) const;
  void evaluate(Node& n);

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
  std::vector<NdArray> grads_;
  bool stale_ = false;
};

}  // namespace hsprior
