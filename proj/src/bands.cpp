#include "curvesurvey/bands.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "curvesurvey/errors.hpp"

namespace curvesurvey {

const char* to_string(BandKind kind) noexcept {
  return kind == BandKind::global ? "global" : "pointwise";
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw OutOfRangeError("risk level alpha = " + std::to_string(alpha) + " outside (0, 1)");
  }
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw OutOfRangeError("normal quantile needs p in (0, 1)");
  // Acklam (2003) coefficients.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement against the exact CDF.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double pointwise_scale(double alpha) {
  check_alpha(alpha);
  return normal_quantile(1.0 - 0.5 * alpha);
}

double global_scale(double alpha) {
  check_alpha(alpha);
  return std::sqrt(2.0 * std::log(2.0 / alpha));
}

double band_scale(double alpha, BandKind kind) {
  return kind == BandKind::global ? global_scale(alpha) : pointwise_scale(alpha);
}

ConfidenceBand build_band(const FunctionalEstimate& estimate, double alpha, BandKind kind) {
  if (!estimate.has_variance()) {
    throw InvalidArgumentError("confidence band needs an estimate with a variance function");
  }
  if (estimate.variance_diag.size() != estimate.mean.size()) {
    throw ShapeError("variance and mean lengths differ");
  }
  const double scale = band_scale(alpha, kind);
  ConfidenceBand band{estimate.grid, estimate.mean, {}, alpha, kind, 0};
  band.half_width.resize(estimate.mean.size());
  for (std::size_t j = 0; j < band.half_width.size(); ++j) {
    double v = estimate.variance_diag[j];
    if (v < 0) {
      v = 0;
      ++band.clamped_count;
    }
    band.half_width[j] = scale * std::sqrt(v);
  }
  return band;
}

namespace {

bool point_covered(const ConfidenceBand& band, std::span<const double> truth, std::size_t j) {
  const double err = std::abs(band.center[j] - truth[j]);
  if (band.half_width[j] == 0.0) return err == 0.0;
  return err < band.half_width[j];
}

void check_truth(const ConfidenceBand& band, std::span<const double> truth) {
  if (truth.size() != band.center.size()) {
    throw ShapeError("truth has " + std::to_string(truth.size()) + " points, band has " +
                     std::to_string(band.center.size()));
  }
}

}  // namespace

bool covers(const ConfidenceBand& band, std::span<const double> truth) {
  check_truth(band, truth);
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (!point_covered(band, truth, j)) return false;
  }
  return true;
}

double pointwise_coverage_fraction(const ConfidenceBand& band, std::span<const double> truth) {
  check_truth(band, truth);
  std::size_t hit = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) hit += point_covered(band, truth, j) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace curvesurvey
