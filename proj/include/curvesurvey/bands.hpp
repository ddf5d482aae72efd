#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "curvesurvey/estimate.hpp"

namespace curvesurvey {

enum class BandKind { pointwise, global };

const char* to_string(BandKind kind) noexcept;

struct ConfidenceBand {
  TimeGrid grid;
  std::vector<double> center;
  std::vector<double> half_width;
  double alpha = 0.05;
  BandKind kind = BandKind::global;
  // Grid points whose estimated variance was negative and clamped to zero.
  std::size_t clamped_count = 0;

  double lower(std::size_t j) const { return center[j] - half_width[j]; }
  double upper(std::size_t j) const { return center[j] + half_width[j]; }
};

// Standard normal quantile, Acklam's rational approximation followed by one
// Halley step against erfc; absolute error well below 1e-12 on (0, 1).
double normal_quantile(double p);

// z_{1 - alpha/2}.
double pointwise_scale(double alpha);

// {2 log(2/alpha)}^{1/2}, the Gaussian-supremum scaling for simultaneous bands.
double global_scale(double alpha);

double band_scale(double alpha, BandKind kind);

ConfidenceBand build_band(const FunctionalEstimate& estimate, double alpha, BandKind kind);

// |center - truth| < half_width at every grid point. A point with zero width
// and zero error counts as covered.
bool covers(const ConfidenceBand& band, std::span<const double> truth);

// Fraction of grid points covered under the same rule.
double pointwise_coverage_fraction(const ConfidenceBand& band, std::span<const double> truth);

}  // namespace curvesurvey
