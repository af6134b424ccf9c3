#include "hsprior/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "hsprior/error.hpp"

namespace hsprior {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  const double centre = (kWindow - 1) / 2.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - centre;
    taps[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

/// Separable "valid" Gaussian filtering of a rows x cols plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t rows, std::size_t cols,
                                 const std::array<double, kWindow>& taps) {
  const std::size_t out_rows = rows - kWindow + 1;
  const std::size_t out_cols = cols - kWindow + 1;
  std::vector<double> horizontal(rows * out_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += taps[k] * plane[r * cols + c + k];
      horizontal[r * out_cols + c] = acc;
    }
  }
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += taps[k] * horizontal[(r + k) * out_cols + c];
      out[r * out_cols + c] = acc;
    }
  }
  return out;
}

double band_ssim(std::span<const double> x, std::span<const double> y, std::size_t rows, std::size_t cols,
                 const std::array<double, kWindow>& taps) {
  const std::size_t n = rows * cols;
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end()), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid(xs, rows, cols, taps);
  const auto mu_y = filter_valid(ys, rows, cols, taps);
  const auto e_xx = filter_valid(xx, rows, cols, taps);
  const auto e_yy = filter_valid(yy, rows, cols, taps);
  const auto e_xy = filter_valid(xy, rows, cols, taps);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = e_xx[i] - mx * mx;
    const double vy = e_yy[i] - my * my;
    const double cxy = e_xy[i] - mx * my;
    total += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
  }
  return total / static_cast<double>(mu_x.size());
}

}  // namespace

double mpsnr(const HyperCube& x, const HyperCube& ref) {
  require_same_shape(x, ref, "mpsnr");
  double total = 0.0;
  for (std::size_t b = 0; b < x.bands(); ++b) {
    const auto xb = x.band(b), rb = ref.band(b);
    double sq = 0.0;
    for (std::size_t i = 0; i < xb.size(); ++i) {
      const double d = xb[i] - rb[i];
      sq += d * d;
    }
    const double mse = sq / static_cast<double>(xb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    total += 10.0 * std::log10(1.0 / mse);
  }
  return total / static_cast<double>(x.bands());
}

double mssim(const HyperCube& x, const HyperCube& ref) {
  require_same_shape(x, ref, "mssim");
  if (x.rows() < kWindow) throw ShapeError("rows", "SSIM needs at least 11 rows, got " + std::to_string(x.rows()));
  if (x.cols() < kWindow) throw ShapeError("cols", "SSIM needs at least 11 cols, got " + std::to_string(x.cols()));
  const auto taps = gaussian_taps();
  double total = 0.0;
  for (std::size_t b = 0; b < x.bands(); ++b) total += band_ssim(x.band(b), ref.band(b), x.rows(), x.cols(), taps);
  return total / static_cast<double>(x.bands());
}

double sam(const HyperCube& x, const HyperCube& ref) {
  require_same_shape(x, ref, "sam");
  const std::size_t pixels = x.band_size();
  const auto xv = x.values(), rv = ref.values();
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double dot = 0.0, nx = 0.0, nr = 0.0;
    for (std::size_t b = 0; b < x.bands(); ++b) {
      const double a = xv[b * pixels + p], c = rv[b * pixels + p];
      dot += a * c;
      nx += a * a;
      nr += c * c;
    }
    if (nx == 0.0 || nr == 0.0) continue;
    const double cosine = std::clamp(dot / (std::sqrt(nx) * std::sqrt(nr)), -1.0, 1.0);
    total += std::acos(cosine);
    ++counted;
  }
  if (counted == 0) throw Error("sam: every pixel has a zero-norm spectrum");
  return total / static_cast<double>(counted) * 180.0 / std::numbers::pi;
}

MetricReport evaluate_metrics(const HyperCube& x, const HyperCube& ref) {
  return {mpsnr(x, ref), mssim(x, ref), sam(x, ref)};
}

std::string format_report(const MetricReport& r) {
  return fmt::format("MPSNR = {:.4f} dB\nMSSIM = {:.4f}\nSAM   = {:.4f} deg\n", r.mpsnr, r.mssim, r.sam);
}

std::string format_report_csv(const MetricReport& r) {
  return fmt::format("mpsnr,mssim,sam\n{},{},{}\n", r.mpsnr, r.mssim, r.sam);
}

}  // namespace hsprior
