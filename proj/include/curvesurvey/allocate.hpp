#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "curvesurvey/population.hpp"

namespace curvesurvey {

struct StratumSummary {
  int stratum = 0;        // label in {1..H}
  std::size_t size = 0;   // N_h
  double dispersion = 0;  // S_h = (integral of corrected variance function)^(1/2)
};

enum class AllocationRule { proportional, optimal, manual };

const char* to_string(AllocationRule rule) noexcept;

struct Allocation {
  std::vector<std::size_t> sizes;  // n_h
  AllocationRule rule = AllocationRule::manual;
  // Integrated variance of the stratified HT mean under `sizes`.
  double objective = 0;
  // Continuous solution before integer rounding (empty for manual).
  std::vector<double> real_sizes;
  std::vector<std::string> warnings;

  std::size_t total() const noexcept;
};

std::vector<StratumSummary> stratum_summaries(const CurvePopulation& pop);

// (1/N^2) sum_h N_h (N_h - n_h) / n_h * S_h^2. Accepts fractional sizes.
double allocation_objective(std::span<const StratumSummary> summaries,
                            std::span<const double> sizes);
double allocation_objective(std::span<const StratumSummary> summaries,
                            std::span<const std::size_t> sizes);

// n_h proportional to N_h, box-constrained to [1, N_h], rounded by largest
// remainder.
Allocation proportional_allocation(std::span<const StratumSummary> summaries, std::size_t n);

// n_h proportional to N_h S_h, same constraints and rounding. Falls back to
// proportional (with a warning) when every S_h is zero.
Allocation optimal_allocation(std::span<const StratumSummary> summaries, std::size_t n);

Allocation manual_allocation(std::span<const StratumSummary> summaries,
                             std::vector<std::size_t> sizes);

// Continuous minimiser of sum_h w_h^2 / x_h subject to sum x_h = n and
// 1 <= x_h <= N_h: x_h = clamp(c * w_h, 1, N_h) with c solving the sum.
// Unclamped strata therefore keep x_h proportional to w_h.
std::vector<double> constrained_proportional(std::span<const double> weights,
                                             std::span<const std::size_t> caps, std::size_t n);

// Largest-remainder rounding to an exact total; ties go to the lower index.
std::vector<std::size_t> largest_remainder_round(std::span<const double> real_sizes,
                                                 std::size_t total);

}  // namespace curvesurvey
