#include "hsprior/tape.hpp"

#include <algorithm>

#include "hsprior/error.hpp"

namespace hsprior {

NodeId Tape::input(Shape shape, std::string label) {
  nodes_.push_back(Node{Kind::input, nullptr, {}, NdArray(std::move(shape)), std::move(label), false});
  return nodes_.size() - 1;
}

NodeId Tape::constant(NdArray value, std::string label) {
  nodes_.push_back(Node{Kind::constant, nullptr, {}, std::move(value), std::move(label), false});
  return nodes_.size() - 1;
}

NodeId Tape::parameter(NdArray value, std::string label) {
  nodes_.push_back(Node{Kind::parameter, nullptr, {}, std::move(value), std::move(label), true});
  parameters_.push_back(nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId Tape::apply(std::unique_ptr<Op> op, std::vector<NodeId> inputs) {
  const NodeId id = nodes_.size();
  std::vector<Shape> shapes;
  shapes.reserve(inputs.size());
  bool needs_grad = false;
  for (NodeId in : inputs) {
    if (in >= id) throw Error(std::string(op->name()) + ": input node " + std::to_string(in) + " does not precede it");
    shapes.push_back(nodes_[in].value.shape());
    needs_grad = needs_grad || nodes_[in].requires_grad;
  }
  Node n{Kind::op, std::move(op), std::move(inputs), {}, {}, needs_grad};
  n.value = NdArray(n.op->output_shape(shapes));
  n.label = std::string(n.op->name());
  evaluate(n);
  nodes_.push_back(std::move(n));
  return id;
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id >= nodes_.size()) throw Error("node " + std::to_string(id) + " does not exist");
  return nodes_[id];
}

void Tape::set_value(NodeId id, NdArray value) {
  const Node& n = node(id);
  if (n.kind == Kind::op) throw Error("cannot assign to op node '" + n.label + "'");
  if (value.shape() != n.value.shape()) {
    throw ShapeError(n.label.empty() ? "node " + std::to_string(id) : n.label,
                     "expected " + to_string(n.value.shape()) + ", got " + to_string(value.shape()));
  }
  nodes_[id].value = std::move(value);
  stale_ = true;
}

const NdArray& Tape::value(NodeId id) const { return node(id).value; }

NdArray& Tape::parameter_value(NodeId id) {
  if (node(id).kind != Kind::parameter) throw Error("node " + std::to_string(id) + " is not a parameter");
  stale_ = true;
  return nodes_[id].value;
}

const Shape& Tape::shape(NodeId id) const { return node(id).value.shape(); }
const std::string& Tape::label(NodeId id) const { return node(id).label; }
bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

std::size_t Tape::parameter_count() const {
  std::size_t total = 0;
  for (NodeId p : parameters_) total += nodes_[p].value.size();
  return total;
}

void Tape::evaluate(Node& n) {
  std::vector<const NdArray*> in;
  in.reserve(n.inputs.size());
  for (NodeId i : n.inputs) in.push_back(&nodes_[i].value);
  n.op->forward(in, n.value);
  if (!n.value.all_finite()) throw NonFiniteError(n.label + ": produced a non-finite value");
}

void Tape::forward() {
  for (Node& n : nodes_) {
    if (n.kind == Kind::op) evaluate(n);
  }
  stale_ = false;
}

std::vector<NdArray> Tape::backward(NodeId loss) {
  const Node& target = node(loss);
  if (target.value.size() != 1) {
    throw ShapeError("loss", "backward needs a scalar node, got " + to_string(target.value.shape()));
  }
  if (stale_) throw Error("backward called before forward on updated values");

  grads_.resize(nodes_.size());
  for (NodeId id = 0; id <= loss; ++id) {
    if (!nodes_[id].requires_grad) continue;
    if (grads_[id].shape() != nodes_[id].value.shape()) {
      grads_[id] = NdArray(nodes_[id].value.shape());
    } else {
      grads_[id].fill(0.0);
    }
  }

  if (target.requires_grad) {
    grads_[loss][0] = 1.0;
    std::vector<const NdArray*> in;
    std::vector<NdArray*> in_grads;
    for (NodeId id = loss + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.kind != Kind::op || !n.requires_grad) continue;
      in.clear();
      in_grads.clear();
      for (NodeId i : n.inputs) {
        if (i >= id) throw Error(n.label + ": cycle detected in the graph");
        in.push_back(&nodes_[i].value);
        in_grads.push_back(nodes_[i].requires_grad ? &grads_[i] : nullptr);
      }
      n.op->backward(in, n.value, grads_[id], in_grads);
    }
  }

  std::vector<NdArray> out;
  out.reserve(parameters_.size());
  for (NodeId p : parameters_) {
    out.push_back(p <= loss ? grads_[p] : NdArray(nodes_[p].value.shape()));
  }
  return out;
}

}  // namespace hsprior
