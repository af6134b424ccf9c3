#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsprior/ndarray.hpp"

namespace hsprior {

/// H x W x C hyperspectral image of finite reals.
///
/// Storage is band-sequential: all of band 0 row by row, then band 1, and so
/// on, which is also the [C, H, W] layout the networks consume.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, double fill = 0.0);
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<double> band_sequential);
  /// Wraps a [C, H, W] array.
  static HyperCube from_array(const NdArray& chw);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t band_size() const noexcept { return rows_ * cols_; }

  double& at(std::size_t row, std::size_t col, std::size_t band) {
    return data_[(band * rows_ + row) * cols_ + col];
  }
  double at(std::size_t row, std::size_t col, std::size_t band) const {
    return data_[(band * rows_ + row) * cols_ + col];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> band(std::size_t b) const { return std::span(data_).subspan(b * band_size(), band_size()); }

  /// [C, H, W] copy of the data.
  NdArray to_array() const;
  bool same_shape(const HyperCube& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && bands_ == other.bands_;
  }
  bool in_unit_range() const noexcept;

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

/// Binary observation mask; 1 marks an intact value, 0 a missing one.
class Mask {
 public:
  /// Throws Error unless every value is exactly 0 or 1.
  explicit Mask(HyperCube values);
  static Mask all_ones(std::size_t rows, std::size_t cols, std::size_t bands);

  const HyperCube& cube() const noexcept { return values_; }
  std::size_t observed_count() const noexcept;

 private:
  HyperCube values_;
};

void require_same_shape(const HyperCube& a, const HyperCube& b, const char* what);

}  // namespace hsprior
