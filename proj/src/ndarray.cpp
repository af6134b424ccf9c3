#include "hsprior/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "hsprior/error.hpp"

namespace hsprior {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    if (shape[axis] == 0) {
      throw ShapeError("axis " + std::to_string(axis), "extents must be positive, got " + to_string(shape));
    }
  }
}

}  // namespace

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(element_count(shape_), fill);
}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  check_extents(shape_);
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("data", "shape " + to_string(shape_) + " needs " + std::to_string(element_count(shape_)) +
                                 " values, got " + std::to_string(data_.size()));
  }
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void NdArray::reshape(Shape shape) {
  check_extents(shape);
  if (element_count(shape) != data_.size()) {
    throw ShapeError("reshape", "cannot view " + to_string(shape_) + " as " + to_string(shape));
  }
  shape_ = std::move(shape);
}

bool NdArray::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace hsprior
