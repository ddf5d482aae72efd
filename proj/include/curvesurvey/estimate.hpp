#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "curvesurvey/design.hpp"
#include "curvesurvey/numeric.hpp"
#include "curvesurvey/population.hpp"

namespace curvesurvey {

// How the double sums over unit pairs are evaluated.
//  blockwise: uses the stratum block structure of Delta_kl, O(N d) per point.
//  pairwise:  the literal double loop over all pairs, O(N^2 d). Reference route.
enum class PairSummation { blockwise, pairwise };

struct VarianceEstimate {
  std::vector<double> diagonal;
  std::optional<SquareMatrix> covariance;
  // Grid points with a negative diagonal value (kept as is).
  std::size_t negative_count = 0;
};

struct FunctionalEstimate {
  TimeGrid grid;
  std::vector<double> mean;
  std::vector<double> variance_diag;  // empty when variance was not requested
  std::optional<SquareMatrix> covariance;
  Sample sample;
  std::size_t negative_variance_count = 0;

  bool has_variance() const noexcept { return !variance_diag.empty(); }
};

struct TrueVariance {
  TimeGrid grid;
  std::vector<double> variance_diag;
  std::optional<SquareMatrix> covariance;
};

// HT mean curve on the grid: (1/N) sum_{k in s} Y_k(t_j) / pi_k.
std::vector<double> ht_mean(const CurvePopulation& pop, const Sample& sample);

// Same estimator at an arbitrary t, through the linear interpolants.
double ht_mean_at(const CurvePopulation& pop, const Sample& sample, double t);

// Design covariance (1/N^2) sum_k sum_l Y_k(s) Y_l(t) Delta_kl / (pi_k pi_l).
TrueVariance true_covariance(const CurvePopulation& pop, const SamplingDesign& design,
                             bool diagonal_only = true,
                             PairSummation method = PairSummation::blockwise);

// Unbiased HT covariance estimator over sampled pairs, weights Delta_kl / pi_kl.
// Throws VarianceInestimableError when some n_h < 2.
VarianceEstimate ht_covariance_estimate(const CurvePopulation& pop, const Sample& sample,
                                        bool diagonal_only = true,
                                        PairSummation method = PairSummation::blockwise);

// (1/N^2) sum_h N_h (N_h - n_h) / n_h * corrected within-stratum covariance.
// Throws DegenerateStratumError when some N_h < 2.
TrueVariance stratified_true_covariance(const CurvePopulation& pop,
                                        const SamplingDesign& design,
                                        bool diagonal_only = true);

// Plug-in of the within-sample stratum covariances into the formula above.
VarianceEstimate stratified_variance_estimate(const CurvePopulation& pop, const Sample& sample,
                                              bool diagonal_only = true);

struct EstimateOptions {
  bool with_variance = true;
  bool diagonal_only = true;
  PairSummation method = PairSummation::blockwise;
};

FunctionalEstimate estimate(const CurvePopulation& pop, const Sample& sample,
                            const EstimateOptions& options = {});

}  // namespace curvesurvey
