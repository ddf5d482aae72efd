#include "curvesurvey/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "curvesurvey/errors.hpp"
#include "curvesurvey/numeric.hpp"

namespace curvesurvey {

const char* to_string(AllocationRule rule) noexcept {
  switch (rule) {
    case AllocationRule::proportional: return "proportional";
    case AllocationRule::optimal: return "optimal";
    case AllocationRule::manual: return "manual";
  }
  return "unknown";
}

std::size_t Allocation::total() const noexcept {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

std::vector<StratumSummary> stratum_summaries(const CurvePopulation& pop) {
  if (!pop.has_strata()) throw InvalidArgumentError("strata required");
  const std::size_t n_strata = pop.stratum_count();
  const std::size_t d = pop.grid_size();
  const auto sizes = pop.stratum_sizes();

  std::vector<std::vector<CompensatedSum>> sum(n_strata, std::vector<CompensatedSum>(d));
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const auto h = static_cast<std::size_t>(pop.strata()[k] - 1);
    const auto y = pop.row(k);
    for (std::size_t j = 0; j < d; ++j) sum[h][j].add(y[j]);
  }
  std::vector<std::vector<double>> mean(n_strata, std::vector<double>(d));
  for (std::size_t h = 0; h < n_strata; ++h) {
    if (sizes[h] < 2) {
      throw DegenerateStratumError("stratum " + std::to_string(h + 1) +
                                   " has fewer than 2 units; its dispersion is undefined");
    }
    for (std::size_t j = 0; j < d; ++j) {
      mean[h][j] = sum[h][j].value() / static_cast<double>(sizes[h]);
    }
  }
  std::vector<std::vector<CompensatedSum>> sq(n_strata, std::vector<CompensatedSum>(d));
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const auto h = static_cast<std::size_t>(pop.strata()[k] - 1);
    const auto y = pop.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      const double x = y[j] - mean[h][j];
      sq[h][j].add(x * x);
    }
  }
  std::vector<StratumSummary> out;
  std::vector<double> corrected(d);
  for (std::size_t h = 0; h < n_strata; ++h) {
    for (std::size_t j = 0; j < d; ++j) {
      corrected[j] = sq[h][j].value() / static_cast<double>(sizes[h] - 1);
    }
    const double integral = trapezoid_integral(corrected, pop.grid());
    out.push_back({static_cast<int>(h + 1), sizes[h], std::sqrt(std::max(integral, 0.0))});
  }
  return out;
}

namespace {

double total_size(std::span<const StratumSummary> summaries) {
  double n = 0;
  for (const auto& s : summaries) n += static_cast<double>(s.size);
  return n;
}

std::vector<std::size_t> caps_of(std::span<const StratumSummary> summaries) {
  std::vector<std::size_t> caps;
  for (const auto& s : summaries) caps.push_back(s.size);
  return caps;
}

void check_total(std::span<const StratumSummary> summaries, std::size_t n) {
  if (summaries.empty()) throw InvalidArgumentError("allocation needs at least one stratum");
  const auto big_n = static_cast<std::size_t>(total_size(summaries));
  if (n < summaries.size() || n > big_n) {
    throw InvalidArgumentError("no feasible allocation of n = " + std::to_string(n) + " over " +
                               std::to_string(summaries.size()) + " strata with N = " +
                               std::to_string(big_n) + " (need H <= n <= N)");
  }
}

void add_estimability_warnings(Allocation& a) {
  for (std::size_t h = 0; h < a.sizes.size(); ++h) {
    if (a.sizes[h] == 1) {
      a.warnings.push_back("stratum " + std::to_string(h + 1) +
                           " gets n_h = 1: stratified variance estimation is impossible");
    }
  }
}

Allocation finish(std::span<const StratumSummary> summaries, AllocationRule rule,
                  std::vector<double> real_sizes, std::size_t n) {
  Allocation a;
  a.rule = rule;
  a.sizes = largest_remainder_round(real_sizes, n);
  for (std::size_t h = 0; h < a.sizes.size(); ++h) {
    if (a.sizes[h] < 1 || a.sizes[h] > summaries[h].size) {
      throw Error("internal: rounded allocation left [1, N_h] in stratum " + std::to_string(h + 1));
    }
  }
  a.real_sizes = std::move(real_sizes);
  a.objective = allocation_objective(summaries, std::span<const std::size_t>(a.sizes));
  add_estimability_warnings(a);
  return a;
}

}  // namespace

double allocation_objective(std::span<const StratumSummary> summaries,
                            std::span<const double> sizes) {
  if (sizes.size() != summaries.size()) {
    throw ShapeError("allocation has " + std::to_string(sizes.size()) + " entries for " +
                     std::to_string(summaries.size()) + " strata");
  }
  const double big_n = total_size(summaries);
  CompensatedSum acc;
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    if (!(sizes[h] > 0)) {
      throw InvalidArgumentError("stratum " + std::to_string(h + 1) + " has n_h <= 0");
    }
    const auto size = static_cast<double>(summaries[h].size);
    const double s = summaries[h].dispersion;
    acc.add(size * (size - sizes[h]) / sizes[h] * s * s);
  }
  return acc.value() / (big_n * big_n);
}

double allocation_objective(std::span<const StratumSummary> summaries,
                            std::span<const std::size_t> sizes) {
  std::vector<double> real(sizes.begin(), sizes.end());
  return allocation_objective(summaries, std::span<const double>(real));
}

std::vector<double> constrained_proportional(std::span<const double> weights,
                                             std::span<const std::size_t> caps, std::size_t n) {
  const std::size_t count = weights.size();
  if (caps.size() != count) throw ShapeError("weights and caps differ in length");
  const auto target = static_cast<double>(n);
  auto clamp_at = [&](double c, std::size_t h) {
    return std::clamp(c * weights[h], 1.0, static_cast<double>(caps[h]));
  };
  auto total_at = [&](double c) {
    double g = 0;
    for (std::size_t h = 0; h < count; ++h) g += clamp_at(c, h);
    return g;
  };

  std::vector<double> breakpoints;
  for (std::size_t h = 0; h < count; ++h) {
    if (weights[h] < 0 || !std::isfinite(weights[h])) {
      throw InvalidArgumentError("allocation weights must be finite and >= 0");
    }
    if (weights[h] > 0) {
      breakpoints.push_back(1.0 / weights[h]);
      breakpoints.push_back(static_cast<double>(caps[h]) / weights[h]);
    }
  }
  std::sort(breakpoints.begin(), breakpoints.end());

  if (breakpoints.empty()) throw InvalidArgumentError("allocation weights are all zero");
  if (total_at(breakpoints.back()) < target) {
    // Weighted strata saturate before reaching n; the zero-weight strata share
    // the rest in proportion to their sizes.
    std::vector<double> x(count, 0.0);
    std::vector<double> rest_weights;
    std::vector<std::size_t> rest_caps, rest_index;
    std::size_t used = 0;
    for (std::size_t h = 0; h < count; ++h) {
      if (weights[h] > 0) {
        x[h] = static_cast<double>(caps[h]);
        used += caps[h];
      } else {
        rest_weights.push_back(static_cast<double>(caps[h]));
        rest_caps.push_back(caps[h]);
        rest_index.push_back(h);
      }
    }
    if (rest_index.empty()) {
      throw InvalidArgumentError("allocation total exceeds the population size");
    }
    const auto rest = constrained_proportional(rest_weights, rest_caps, n - used);
    for (std::size_t i = 0; i < rest_index.size(); ++i) x[rest_index[i]] = rest[i];
    return x;
  }

  std::size_t b = 0;
  while (total_at(breakpoints[b]) < target) ++b;
  const double lower = b == 0 ? 0.0 : breakpoints[b - 1];
  const double upper = breakpoints[b];
  const double mid = 0.5 * (lower + upper);

  // On (lower, upper) every stratum is either pinned at a bound or free with
  // x_h = c w_h; solve the sum constraint for c on the free set.
  double pinned = 0;
  double free_weight = 0;
  std::vector<int> state(count);  // -1 low, +1 high, 0 free
  for (std::size_t h = 0; h < count; ++h) {
    const double v = mid * weights[h];
    if (v <= 1.0) {
      state[h] = -1;
      pinned += 1.0;
    } else if (v >= static_cast<double>(caps[h])) {
      state[h] = 1;
      pinned += static_cast<double>(caps[h]);
    } else {
      free_weight += weights[h];
    }
  }
  const double c = free_weight > 0 ? (target - pinned) / free_weight : upper;
  std::vector<double> x(count);
  for (std::size_t h = 0; h < count; ++h) {
    if (state[h] == -1 && free_weight > 0) {
      x[h] = 1.0;
    } else if (state[h] == 1 && free_weight > 0) {
      x[h] = static_cast<double>(caps[h]);
    } else {
      x[h] = clamp_at(c, h);
    }
  }
  return x;
}

std::vector<std::size_t> largest_remainder_round(std::span<const double> real_sizes,
                                                 std::size_t total) {
  std::vector<std::size_t> out(real_sizes.size());
  std::vector<double> remainder(real_sizes.size());
  std::size_t assigned = 0;
  for (std::size_t h = 0; h < real_sizes.size(); ++h) {
    if (!(real_sizes[h] >= 0)) throw InvalidArgumentError("negative size in rounding");
    const double fl = std::floor(real_sizes[h]);
    out[h] = static_cast<std::size_t>(fl);
    remainder[h] = real_sizes[h] - fl;
    assigned += out[h];
  }
  if (assigned > total) {
    throw InvalidArgumentError("rounding target " + std::to_string(total) +
                               " is below the sum of the integer parts");
  }
  std::vector<std::size_t> order(real_sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  std::size_t left = total - assigned;
  for (std::size_t i = 0; left > 0; i = (i + 1) % order.size(), --left) ++out[order[i]];
  return out;
}

Allocation proportional_allocation(std::span<const StratumSummary> summaries, std::size_t n) {
  check_total(summaries, n);
  std::vector<double> weights;
  for (const auto& s : summaries) weights.push_back(static_cast<double>(s.size));
  const auto caps = caps_of(summaries);
  return finish(summaries, AllocationRule::proportional,
                constrained_proportional(weights, caps, n), n);
}

Allocation optimal_allocation(std::span<const StratumSummary> summaries, std::size_t n) {
  check_total(summaries, n);
  std::vector<double> weights;
  double weight_sum = 0;
  for (const auto& s : summaries) {
    if (!(s.dispersion >= 0) || !std::isfinite(s.dispersion)) {
      throw InvalidArgumentError("stratum dispersion must be finite and >= 0");
    }
    weights.push_back(static_cast<double>(s.size) * s.dispersion);
    weight_sum += weights.back();
  }
  if (!(weight_sum > 0)) {
    Allocation a = proportional_allocation(summaries, n);
    a.warnings.insert(a.warnings.begin(),
                      "all stratum dispersions are zero; using proportional allocation");
    return a;
  }
  const auto caps = caps_of(summaries);
  return finish(summaries, AllocationRule::optimal, constrained_proportional(weights, caps, n), n);
}

Allocation manual_allocation(std::span<const StratumSummary> summaries,
                             std::vector<std::size_t> sizes) {
  if (sizes.size() != summaries.size()) {
    throw ShapeError("manual allocation has " + std::to_string(sizes.size()) + " entries for " +
                     std::to_string(summaries.size()) + " strata");
  }
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    if (sizes[h] < 1 || sizes[h] > summaries[h].size) {
      throw InvalidArgumentError("stratum " + std::to_string(h + 1) + ": need 1 <= n_h <= N_h");
    }
  }
  Allocation a;
  a.rule = AllocationRule::manual;
  a.sizes = std::move(sizes);
  a.objective = allocation_objective(summaries, std::span<const std::size_t>(a.sizes));
  add_estimability_warnings(a);
  return a;
}

}  // namespace curvesurvey
