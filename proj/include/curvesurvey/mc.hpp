#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvesurvey/allocate.hpp"
#include "curvesurvey/design.hpp"
#include "curvesurvey/population.hpp"

namespace curvesurvey {

enum class DesignRecipe { srswor, stratified_manual, stratified_proportional, stratified_optimal };

// A named design as written in experiment configs. Allocation rules are
// resolved against the population at run time.
struct DesignConfig {
  std::string name;
  DesignRecipe recipe = DesignRecipe::srswor;
  std::size_t sample_size = 0;            // srswor, proportional, optimal
  std::vector<std::size_t> allocation;    // stratified_manual
};

struct ResolvedDesign {
  std::shared_ptr<const SamplingDesign> design;
  std::optional<Allocation> allocation;
};

ResolvedDesign resolve_design(const CurvePopulation& pop, const DesignConfig& config);

struct ExperimentSpec {
  std::vector<DesignConfig> designs;
  std::size_t replicates = 1000;
  std::vector<double> alphas{0.05, 0.01};
  std::uint64_t master_seed = 1;
  // Worker threads; 0 reads CURVESURVEY_THREADS, then falls back to hardware.
  unsigned threads = 0;
};

void validate(const ExperimentSpec& spec);

// Integrated absolute error, trapezoid rule on the grid.
double loss_mu(std::span<const double> estimate, std::span<const double> truth,
               const TimeGrid& grid);
double loss_gamma(std::span<const double> var_estimate, std::span<const double> var_truth,
                  const TimeGrid& grid);

struct LossSummary {
  double mean = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
};

LossSummary summarize(std::vector<double> values);

struct CoverageResult {
  double alpha = 0;
  double global = 0;             // fraction of replicates whose global band covers
  double pointwise_average = 0;  // mean fraction of grid points inside the pointwise interval
};

struct DesignResult {
  std::string name;
  std::string description;
  std::optional<std::string> error;
  std::vector<std::size_t> allocation;
  std::size_t sample_size = 0;

  LossSummary loss_mu;
  LossSummary loss_gamma;
  std::vector<CoverageResult> coverage;
  double integrated_true_variance = 0;
  // Mean over replicates of sup_t |mu_hat - mu_N| and sup_t |gamma_hat - gamma|.
  double mean_sup_error_mu = 0;
  double mean_sup_error_gamma = 0;
  std::size_t negative_variance_replicates = 0;

  // Per grid point.
  std::vector<double> true_sd;
  std::vector<double> estimate_mean;   // replicate average of mu_hat
  std::vector<double> estimate_sd;     // replicate standard deviation of mu_hat
  std::vector<double> variance_estimate_mean;
  std::vector<double> variance_estimate_sd;
  std::vector<double> envelope_lower;  // pointwise min of mu_hat over replicates
  std::vector<double> envelope_upper;
};

struct McReport {
  TimeGrid grid;
  std::size_t population_size = 0;
  std::size_t replicates = 0;
  std::vector<double> alphas;
  std::uint64_t master_seed = 0;
  std::vector<DesignResult> designs;
  // Wall clock, kept out of the serialized report so that it stays deterministic.
  double elapsed_seconds = 0;
};

// Seed of replicate r of design index i.
std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t design_index,
                             std::size_t replicate);

unsigned resolve_thread_count(unsigned requested);

McReport run_experiment(const CurvePopulation& pop, const ExperimentSpec& spec);

struct DesignRanking {
  // Indices into McReport::designs; failed designs come last.
  std::vector<std::size_t> by_mean_loss;
  std::vector<std::size_t> by_integrated_variance;
  std::vector<std::string> names;
  std::vector<std::vector<double>> true_sd;
};

DesignRanking compare_designs(const McReport& report);

}  // namespace curvesurvey
