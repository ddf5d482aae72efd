#include "curvesurvey/estimate.hpp"

#include <algorithm>
#include <string>

#include "curvesurvey/errors.hpp"

namespace curvesurvey {

namespace {

const SamplingDesign& checked_design(const CurvePopulation& pop, const Sample& sample) {
  if (!sample.design) throw InvalidArgumentError("sample carries no design");
  if (sample.design->population_size() != pop.size()) {
    throw ShapeError("sample design covers " + std::to_string(sample.design->population_size()) +
                     " units, population has " + std::to_string(pop.size()));
  }
  return *sample.design;
}

void check_design(const CurvePopulation& pop, const SamplingDesign& design) {
  if (design.population_size() != pop.size()) {
    throw ShapeError("design covers " + std::to_string(design.population_size()) +
                     " units, population has " + std::to_string(pop.size()));
  }
}

// Sampled units grouped by stratum.
std::vector<std::vector<std::size_t>> split_by_stratum(const SamplingDesign& design,
                                                       const Sample& sample) {
  std::vector<std::vector<std::size_t>> groups(design.stratum_count());
  for (std::size_t k : sample.indices) groups[design.stratum_of(k)].push_back(k);
  return groups;
}

// Second moments of a group of curves after subtracting the group mean:
// cross(i, j) = sum_k x_k(t_i) x_k(t_j) and total(i) = sum_k x_k(t_i), where
// x = y - mean. `total` is zero up to rounding and is kept so that the
// quadratic forms below stay exact identities.
struct CenteredMoments {
  std::vector<double> total;
  std::vector<double> cross;  // d entries (diagonal) or d*d row-major
};

CenteredMoments centered_moments(const CurvePopulation& pop, std::span<const std::size_t> units,
                                 bool diagonal_only) {
  const std::size_t d = pop.grid_size();
  std::vector<CompensatedSum> sum(d);
  for (std::size_t k : units) {
    const auto y = pop.row(k);
    for (std::size_t j = 0; j < d; ++j) sum[j].add(y[j]);
  }
  std::vector<double> center(d);
  const auto count = static_cast<double>(units.size());
  for (std::size_t j = 0; j < d; ++j) center[j] = sum[j].value() / count;

  std::vector<CompensatedSum> total(d);
  std::vector<CompensatedSum> cross(diagonal_only ? d : d * d);
  std::vector<double> x(d);
  for (std::size_t k : units) {
    const auto y = pop.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = y[j] - center[j];
      total[j].add(x[j]);
    }
    if (diagonal_only) {
      for (std::size_t j = 0; j < d; ++j) cross[j].add(x[j] * x[j]);
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) cross[i * d + j].add(x[i] * x[j]);
      }
    }
  }
  CenteredMoments m;
  m.total.resize(d);
  for (std::size_t j = 0; j < d; ++j) m.total[j] = total[j].value();
  m.cross.resize(cross.size());
  for (std::size_t i = 0; i < cross.size(); ++i) m.cross[i] = cross[i].value();
  return m;
}

// Accumulates sum_h [ diag_h * cross_h(i,j) + off_h * (total_h(i) total_h(j) - cross_h(i,j)) ],
// the blockwise form of sum_k sum_l x_k(t_i) x_l(t_j) c_kl when c_kl equals
// diag_h on the diagonal and off_h on same-stratum off-diagonal pairs.
class QuadraticFormAccumulator {
 public:
  QuadraticFormAccumulator(std::size_t d, bool diagonal_only)
      : d_(d), diagonal_only_(diagonal_only), acc_(diagonal_only ? d : d * d) {}

  void add_block(const CenteredMoments& m, double diag_coef, double off_coef) {
    if (diagonal_only_) {
      for (std::size_t j = 0; j < d_; ++j) {
        acc_[j].add((diag_coef - off_coef) * m.cross[j] + off_coef * m.total[j] * m.total[j]);
      }
    } else {
      for (std::size_t i = 0; i < d_; ++i) {
        for (std::size_t j = i; j < d_; ++j) {
          acc_[i * d_ + j].add((diag_coef - off_coef) * m.cross[i * d_ + j] +
                               off_coef * m.total[i] * m.total[j]);
        }
      }
    }
  }

  std::vector<double> diagonal(double scale) const {
    std::vector<double> out(d_);
    for (std::size_t j = 0; j < d_; ++j) {
      out[j] = scale * acc_[diagonal_only_ ? j : j * d_ + j].value();
    }
    return out;
  }

  SquareMatrix matrix(double scale) const {
    SquareMatrix out(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      for (std::size_t j = i; j < d_; ++j) {
        out(i, j) = scale * acc_[i * d_ + j].value();
        out(j, i) = out(i, j);
      }
    }
    return out;
  }

 private:
  std::size_t d_;
  bool diagonal_only_;
  std::vector<CompensatedSum> acc_;
};

// Literal double sum (1/N^2) sum_{k in units} sum_{l in units} y_k y_l c(k, l).
template <class Coef>
void pairwise_sum(const CurvePopulation& pop, std::span<const std::size_t> units,
                  bool diagonal_only, Coef coef, std::vector<double>& diag,
                  std::optional<SquareMatrix>& full) {
  const std::size_t d = pop.grid_size();
  const double scale = 1.0 / (static_cast<double>(pop.size()) * static_cast<double>(pop.size()));
  std::vector<CompensatedSum> acc(diagonal_only ? d : d * d);
  for (std::size_t k : units) {
    const auto yk = pop.row(k);
    for (std::size_t l : units) {
      const double c = coef(k, l);
      if (c == 0.0) continue;
      const auto yl = pop.row(l);
      if (diagonal_only) {
        for (std::size_t j = 0; j < d; ++j) acc[j].add(yk[j] * yl[j] * c);
      } else {
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = i; j < d; ++j) acc[i * d + j].add(yk[i] * yl[j] * c);
        }
      }
    }
  }
  diag.assign(d, 0.0);
  if (diagonal_only) {
    for (std::size_t j = 0; j < d; ++j) diag[j] = scale * acc[j].value();
    return;
  }
  // (k, l) and (l, k) both enter, so the i <= j half already holds the
  // symmetric sum.
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      m(i, j) = scale * acc[i * d + j].value();
      m(j, i) = m(i, j);
    }
    diag[i] = m(i, i);
  }
  full = std::move(m);
}

std::size_t count_negative(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x < 0; }));
}

void require_estimable(const SamplingDesign& design) {
  for (std::size_t h = 0; h < design.stratum_count(); ++h) {
    if (design.allocation()[h] < 2) {
      throw VarianceInestimableError("stratum " + std::to_string(h + 1) + " has n_h = " +
                                     std::to_string(design.allocation()[h]) +
                                     "; variance estimation needs n_h >= 2 in every stratum");
    }
  }
}

}  // namespace

std::vector<double> ht_mean(const CurvePopulation& pop, const Sample& sample) {
  const SamplingDesign& design = checked_design(pop, sample);
  const std::size_t d = pop.grid_size();
  const auto groups = split_by_stratum(design, sample);
  std::vector<CompensatedSum> acc(d);
  for (std::size_t h = 0; h < groups.size(); ++h) {
    if (groups[h].empty()) continue;
    const double weight = 1.0 / design.stratum_pi1(h);
    for (std::size_t k : groups[h]) {
      const auto y = pop.row(k);
      for (std::size_t j = 0; j < d; ++j) acc[j].add(y[j] * weight);
    }
  }
  std::vector<double> mean(d);
  const auto big_n = static_cast<double>(pop.size());
  for (std::size_t j = 0; j < d; ++j) mean[j] = acc[j].value() / big_n;
  return mean;
}

double ht_mean_at(const CurvePopulation& pop, const Sample& sample, double t) {
  // The interpolant of the HT mean equals the HT mean of the interpolants.
  return interpolate(ht_mean(pop, sample), pop.grid(), t);
}

TrueVariance true_covariance(const CurvePopulation& pop, const SamplingDesign& design,
                             bool diagonal_only, PairSummation method) {
  check_design(pop, design);
  const std::size_t d = pop.grid_size();
  const auto big_n = static_cast<double>(pop.size());
  TrueVariance out{pop.grid(), {}, std::nullopt};

  if (method == PairSummation::pairwise) {
    std::vector<std::size_t> all(pop.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    pairwise_sum(
        pop, all, diagonal_only,
        [&](std::size_t k, std::size_t l) {
          return design.delta(k, l) / (design.pi1(k) * design.pi1(l));
        },
        out.variance_diag, out.covariance);
    return out;
  }

  // Delta_kl / (pi_k pi_l) is (1-p)/p on the diagonal and (p2 - p^2)/p^2 on
  // same-stratum pairs. Each row of Delta sums to zero inside a fixed-size
  // stratum, so curves may be centered per stratum first.
  QuadraticFormAccumulator acc(d, diagonal_only);
  for (std::size_t h = 0; h < design.stratum_count(); ++h) {
    const double p = design.stratum_pi1(h);
    const double diag_coef = (1.0 - p) / p;
    const double off_coef =
        design.stratum_sizes()[h] >= 2 ? (design.stratum_pi2(h) - p * p) / (p * p) : 0.0;
    acc.add_block(centered_moments(pop, design.members(h), diagonal_only), diag_coef, off_coef);
  }
  const double scale = 1.0 / (big_n * big_n);
  out.variance_diag = acc.diagonal(scale);
  if (!diagonal_only) out.covariance = acc.matrix(scale);
  return out;
}

VarianceEstimate ht_covariance_estimate(const CurvePopulation& pop, const Sample& sample,
                                        bool diagonal_only, PairSummation method) {
  const SamplingDesign& design = checked_design(pop, sample);
  require_estimable(design);
  const std::size_t d = pop.grid_size();
  const auto big_n = static_cast<double>(pop.size());
  VarianceEstimate out;

  if (method == PairSummation::pairwise) {
    pairwise_sum(
        pop, sample.indices, diagonal_only,
        [&](std::size_t k, std::size_t l) {
          const double joint = k == l ? design.pi1(k) : design.pi2(k, l);
          return design.delta(k, l) / (design.pi1(k) * design.pi1(l) * joint);
        },
        out.diagonal, out.covariance);
  } else {
    QuadraticFormAccumulator acc(d, diagonal_only);
    const auto groups = split_by_stratum(design, sample);
    for (std::size_t h = 0; h < groups.size(); ++h) {
      const double p = design.stratum_pi1(h);
      const double p2 = design.stratum_pi2(h);
      const double diag_coef = (1.0 - p) / (p * p);
      const double off_coef = (p2 - p * p) / (p * p * p2);
      acc.add_block(centered_moments(pop, groups[h], diagonal_only), diag_coef, off_coef);
    }
    const double scale = 1.0 / (big_n * big_n);
    out.diagonal = acc.diagonal(scale);
    if (!diagonal_only) out.covariance = acc.matrix(scale);
  }
  out.negative_count = count_negative(out.diagonal);
  return out;
}

TrueVariance stratified_true_covariance(const CurvePopulation& pop, const SamplingDesign& design,
                                        bool diagonal_only) {
  check_design(pop, design);
  const std::size_t d = pop.grid_size();
  const auto big_n = static_cast<double>(pop.size());
  QuadraticFormAccumulator acc(d, diagonal_only);
  for (std::size_t h = 0; h < design.stratum_count(); ++h) {
    const auto size = static_cast<double>(design.stratum_sizes()[h]);
    if (design.stratum_sizes()[h] < 2) {
      throw DegenerateStratumError("stratum " + std::to_string(h + 1) +
                                   " has N_h < 2; its corrected covariance is undefined");
    }
    const auto n_h = static_cast<double>(design.allocation()[h]);
    // N_h (N_h - n_h) / n_h times the corrected covariance sum / (N_h - 1).
    const double coef = size * (size - n_h) / n_h / (size - 1.0);
    acc.add_block(centered_moments(pop, design.members(h), diagonal_only), coef, 0.0);
  }
  const double scale = 1.0 / (big_n * big_n);
  TrueVariance out{pop.grid(), acc.diagonal(scale), std::nullopt};
  if (!diagonal_only) out.covariance = acc.matrix(scale);
  return out;
}

VarianceEstimate stratified_variance_estimate(const CurvePopulation& pop, const Sample& sample,
                                              bool diagonal_only) {
  const SamplingDesign& design = checked_design(pop, sample);
  require_estimable(design);
  const std::size_t d = pop.grid_size();
  const auto big_n = static_cast<double>(pop.size());
  QuadraticFormAccumulator acc(d, diagonal_only);
  const auto groups = split_by_stratum(design, sample);
  for (std::size_t h = 0; h < groups.size(); ++h) {
    const auto size = static_cast<double>(design.stratum_sizes()[h]);
    const auto n_h = static_cast<double>(groups[h].size());
    const double coef = size * (size - n_h) / n_h / (n_h - 1.0);
    acc.add_block(centered_moments(pop, groups[h], diagonal_only), coef, 0.0);
  }
  const double scale = 1.0 / (big_n * big_n);
  VarianceEstimate out;
  out.diagonal = acc.diagonal(scale);
  if (!diagonal_only) out.covariance = acc.matrix(scale);
  out.negative_count = count_negative(out.diagonal);
  return out;
}

FunctionalEstimate estimate(const CurvePopulation& pop, const Sample& sample,
                            const EstimateOptions& options) {
  FunctionalEstimate est{pop.grid(), ht_mean(pop, sample), {}, std::nullopt, sample, 0};
  if (options.with_variance) {
    auto var = ht_covariance_estimate(pop, sample, options.diagonal_only, options.method);
    est.variance_diag = std::move(var.diagonal);
    est.covariance = std::move(var.covariance);
    est.negative_variance_count = var.negative_count;
  }
  return est;
}

}  // namespace curvesurvey
