#pragma once

#include <string>

#include "hsprior/cube.hpp"

namespace hsprior {

/// Quality of a restored cube against a reference.
struct MetricReport {
  double mpsnr = 0.0;  ///< dB; +inf when the cubes are identical
  double mssim = 0.0;
  double sam = 0.0;  ///< degrees
};

/// Mean over bands of 10 log10(1 / MSE_band), peak value 1.
double mpsnr(const HyperCube& x, const HyperCube& ref);

/// Mean over bands of SSIM with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, evaluated on fully covered windows.
double mssim(const HyperCube& x, const HyperCube& ref);

/// Mean spectral angle in degrees over pixels where both spectra are nonzero.
double sam(const HyperCube& x, const HyperCube& ref);

MetricReport evaluate_metrics(const HyperCube& x, const HyperCube& ref);

/// "MPSNR = 20.0000 dB" style lines, one per metric.
std::string format_report(const MetricReport& report);
std::string format_report_csv(const MetricReport& report);

}  // namespace hsprior
