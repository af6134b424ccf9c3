#include "hsprior/cube.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsprior/error.hpp"

namespace hsprior {

namespace {

void check_dims(std::size_t rows, std::size_t cols, std::size_t bands) {
  if (rows == 0) throw ShapeError("rows", "cube extents must be positive");
  if (cols == 0) throw ShapeError("cols", "cube extents must be positive");
  if (bands == 0) throw ShapeError("bands", "cube extents must be positive");
}

}  // namespace

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, double fill)
    : rows_(rows), cols_(cols), bands_(bands) {
  check_dims(rows, cols, bands);
  data_.assign(rows * cols * bands, fill);
}

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<double> band_sequential)
    : rows_(rows), cols_(cols), bands_(bands), data_(std::move(band_sequential)) {
  check_dims(rows, cols, bands);
  if (data_.size() != rows * cols * bands) {
    throw ShapeError("data", "expected " + std::to_string(rows * cols * bands) + " values, got " +
                                 std::to_string(data_.size()));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw NonFiniteError("cube contains a non-finite value");
  }
}

HyperCube HyperCube::from_array(const NdArray& chw) {
  if (chw.rank() != 3) throw ShapeError("rank", "cube needs a [C,H,W] array, got " + to_string(chw.shape()));
  return HyperCube(chw.extent(1), chw.extent(2), chw.extent(0),
                   std::vector<double>(chw.values().begin(), chw.values().end()));
}

NdArray HyperCube::to_array() const { return NdArray({bands_, rows_, cols_}, data_); }

bool HyperCube::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

Mask::Mask(HyperCube values) : values_(std::move(values)) {
  for (double v : values_.values()) {
    if (v != 0.0 && v != 1.0) throw Error("mask values must be exactly 0 or 1, found " + std::to_string(v));
  }
}

Mask Mask::all_ones(std::size_t rows, std::size_t cols, std::size_t bands) {
  return Mask(HyperCube(rows, cols, bands, 1.0));
}

std::size_t Mask::observed_count() const noexcept {
  return static_cast<std::size_t>(std::count(values_.values().begin(), values_.values().end(), 1.0));
}

void require_same_shape(const HyperCube& a, const HyperCube& b, const char* what) {
  const char* dims[] = {"rows", "cols", "bands"};
  const std::size_t lhs[] = {a.rows(), a.cols(), a.bands()};
  const std::size_t rhs[] = {b.rows(), b.cols(), b.bands()};
  for (int i = 0; i < 3; ++i) {
    if (lhs[i] != rhs[i]) {
      throw ShapeError(dims[i], std::string(what) + ": " + std::to_string(lhs[i]) + " vs " + std::to_string(rhs[i]));
    }
  }
}

}  // namespace hsprior
