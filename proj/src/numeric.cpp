#include "curvesurvey/numeric.hpp"

#include <cmath>

#include "curvesurvey/errors.hpp"

namespace curvesurvey {

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgumentError("quantile of an empty sequence");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgumentError("quantile level outside [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace curvesurvey
