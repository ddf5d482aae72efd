#include "curvesurvey/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "curvesurvey/bands.hpp"
#include "curvesurvey/errors.hpp"
#include "curvesurvey/estimate.hpp"
#include "curvesurvey/numeric.hpp"
#include "curvesurvey/rng.hpp"

namespace curvesurvey {

ResolvedDesign resolve_design(const CurvePopulation& pop, const DesignConfig& config) {
  ResolvedDesign out;
  switch (config.recipe) {
    case DesignRecipe::srswor:
      out.design = std::make_shared<const SamplingDesign>(
          SamplingDesign::srswor(pop.size(), config.sample_size));
      return out;
    case DesignRecipe::stratified_manual:
    case DesignRecipe::stratified_proportional:
    case DesignRecipe::stratified_optimal:
      break;
  }
  if (!pop.has_strata()) {
    throw InvalidArgumentError("design '" + config.name + "' is stratified but the population "
                               "has no stratum labels (strata required)");
  }
  const auto summaries = stratum_summaries(pop);
  Allocation allocation;
  if (config.recipe == DesignRecipe::stratified_manual) {
    allocation = manual_allocation(summaries, config.allocation);
  } else if (config.recipe == DesignRecipe::stratified_proportional) {
    allocation = proportional_allocation(summaries, config.sample_size);
  } else {
    allocation = optimal_allocation(summaries, config.sample_size);
  }
  out.design = std::make_shared<const SamplingDesign>(
      SamplingDesign::stratified(pop.strata(), allocation.sizes));
  out.allocation = std::move(allocation);
  return out;
}

void validate(const ExperimentSpec& spec) {
  if (spec.replicates < 1) throw InvalidArgumentError("experiment needs at least 1 replicate");
  if (spec.designs.empty()) throw InvalidArgumentError("experiment needs at least one design");
  for (double a : spec.alphas) {
    if (!(a > 0.0 && a < 1.0)) {
      throw InvalidArgumentError("risk level " + std::to_string(a) + " outside (0, 1)");
    }
  }
}

namespace {

double integrated_abs_error(std::span<const double> a, std::span<const double> b,
                            const TimeGrid& grid) {
  if (a.size() != grid.size() || b.size() != grid.size()) {
    throw ShapeError("loss inputs do not match the grid size " + std::to_string(grid.size()));
  }
  std::vector<double> err(a.size());
  for (std::size_t j = 0; j < err.size(); ++j) err[j] = std::abs(a[j] - b[j]);
  return trapezoid_integral(err, grid);
}

double sup_abs_error(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

constexpr std::size_t kBlockSize = 64;

// Per-grid-point accumulators of one block of replicates.
struct BlockSums {
  std::vector<CompensatedSum> mean, mean_sq, var, var_sq;
  std::vector<double> lo, hi;

  explicit BlockSums(std::size_t d)
      : mean(d), mean_sq(d), var(d), var_sq(d),
        lo(d, std::numeric_limits<double>::infinity()),
        hi(d, -std::numeric_limits<double>::infinity()) {}
};

struct ReplicateScalars {
  double loss_mu = 0;
  double loss_gamma = 0;
  double sup_mu = 0;
  double sup_gamma = 0;
  bool negative = false;
  std::vector<unsigned char> global_cover;  // per alpha
  std::vector<double> pointwise_fraction;   // per alpha
};

void run_design(const CurvePopulation& pop, const ExperimentSpec& spec, std::size_t design_index,
                const std::shared_ptr<const SamplingDesign>& design,
                std::span<const double> truth_mean, std::span<const double> truth_var,
                unsigned threads, DesignResult& result) {
  const std::size_t d = pop.grid_size();
  const std::size_t reps = spec.replicates;
  const std::size_t n_blocks = (reps + kBlockSize - 1) / kBlockSize;
  std::vector<ReplicateScalars> scalars(reps);
  std::vector<BlockSums> blocks(n_blocks, BlockSums(d));
  std::vector<std::exception_ptr> failures(n_blocks);
  std::atomic<std::size_t> next_block{0};

  auto worker = [&]() {
    while (true) {
      const std::size_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        BlockSums& sums = blocks[b];
        const std::size_t end = std::min(reps, (b + 1) * kBlockSize);
        for (std::size_t r = b * kBlockSize; r < end; ++r) {
          const Sample sample = draw(design, replicate_seed(spec.master_seed, design_index, r));
          const FunctionalEstimate est = estimate(pop, sample);
          ReplicateScalars& s = scalars[r];
          s.loss_mu = loss_mu(est.mean, truth_mean, pop.grid());
          s.loss_gamma = loss_gamma(est.variance_diag, truth_var, pop.grid());
          s.sup_mu = sup_abs_error(est.mean, truth_mean);
          s.sup_gamma = sup_abs_error(est.variance_diag, truth_var);
          s.negative = est.negative_variance_count > 0;
          for (double alpha : spec.alphas) {
            s.global_cover.push_back(
                covers(build_band(est, alpha, BandKind::global), truth_mean) ? 1 : 0);
            s.pointwise_fraction.push_back(pointwise_coverage_fraction(
                build_band(est, alpha, BandKind::pointwise), truth_mean));
          }
          for (std::size_t j = 0; j < d; ++j) {
            const double m = est.mean[j];
            const double v = est.variance_diag[j];
            sums.mean[j].add(m);
            sums.mean_sq[j].add(m * m);
            sums.var[j].add(v);
            sums.var_sq[j].add(v * v);
            sums.lo[j] = std::min(sums.lo[j], m);
            sums.hi[j] = std::max(sums.hi[j], m);
          }
        }
      } catch (...) {
        failures[b] = std::current_exception();
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n_blocks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  // Ordered reduction: replicate order for scalars, block order for curves.
  std::vector<double> lm, lg;
  CompensatedSum sup_mu, sup_gamma;
  std::vector<CompensatedSum> global(spec.alphas.size()), pointwise(spec.alphas.size());
  for (const auto& s : scalars) {
    lm.push_back(s.loss_mu);
    lg.push_back(s.loss_gamma);
    sup_mu.add(s.sup_mu);
    sup_gamma.add(s.sup_gamma);
    result.negative_variance_replicates += s.negative ? 1 : 0;
    for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
      global[a].add(s.global_cover[a]);
      pointwise[a].add(s.pointwise_fraction[a]);
    }
  }
  const auto r_count = static_cast<double>(reps);
  result.loss_mu = summarize(std::move(lm));
  result.loss_gamma = summarize(std::move(lg));
  result.mean_sup_error_mu = sup_mu.value() / r_count;
  result.mean_sup_error_gamma = sup_gamma.value() / r_count;
  for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
    result.coverage.push_back(
        {spec.alphas[a], global[a].value() / r_count, pointwise[a].value() / r_count});
  }

  result.estimate_mean.assign(d, 0);
  result.estimate_sd.assign(d, 0);
  result.variance_estimate_mean.assign(d, 0);
  result.variance_estimate_sd.assign(d, 0);
  result.envelope_lower.assign(d, std::numeric_limits<double>::infinity());
  result.envelope_upper.assign(d, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < d; ++j) {
    CompensatedSum m, m2, v, v2;
    for (const auto& blk : blocks) {
      m.add(blk.mean[j].value());
      m2.add(blk.mean_sq[j].value());
      v.add(blk.var[j].value());
      v2.add(blk.var_sq[j].value());
      result.envelope_lower[j] = std::min(result.envelope_lower[j], blk.lo[j]);
      result.envelope_upper[j] = std::max(result.envelope_upper[j], blk.hi[j]);
    }
    const double mm = m.value() / r_count;
    const double vm = v.value() / r_count;
    result.estimate_mean[j] = mm;
    result.variance_estimate_mean[j] = vm;
    if (reps > 1) {
      const double denom = r_count - 1.0;
      result.estimate_sd[j] = std::sqrt(std::max(0.0, (m2.value() - r_count * mm * mm) / denom));
      result.variance_estimate_sd[j] =
          std::sqrt(std::max(0.0, (v2.value() - r_count * vm * vm) / denom));
    }
  }
}

}  // namespace

double loss_mu(std::span<const double> estimate, std::span<const double> truth,
               const TimeGrid& grid) {
  return integrated_abs_error(estimate, truth, grid);
}

double loss_gamma(std::span<const double> var_estimate, std::span<const double> var_truth,
                  const TimeGrid& grid) {
  return integrated_abs_error(var_estimate, var_truth, grid);
}

LossSummary summarize(std::vector<double> values) {
  if (values.empty()) return {};
  LossSummary s;
  s.mean = compensated_sum(values) / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  return s;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t design_index,
                             std::size_t replicate) {
  return derive_seed(derive_seed(master_seed, design_index), replicate);
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CURVESURVEY_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

McReport run_experiment(const CurvePopulation& pop, const ExperimentSpec& spec) {
  validate(spec);
  const auto start = std::chrono::steady_clock::now();
  const unsigned threads = resolve_thread_count(spec.threads);
  const auto truth_mean = population_mean(pop);

  McReport report{pop.grid(), pop.size(), spec.replicates, spec.alphas, spec.master_seed, {}, 0};
  for (std::size_t i = 0; i < spec.designs.size(); ++i) {
    const DesignConfig& config = spec.designs[i];
    DesignResult result;
    result.name = config.name;
    try {
      const ResolvedDesign resolved = resolve_design(pop, config);
      const SamplingDesign& design = *resolved.design;
      result.description = design.describe();
      result.allocation = design.allocation();
      result.sample_size = design.sample_size();
      if (!design.variance_estimable()) {
        throw VarianceInestimableError("design '" + config.name +
                                       "' has a stratum with n_h < 2; variance is not estimable");
      }
      const TrueVariance truth = true_covariance(pop, design);
      result.integrated_true_variance = trapezoid_integral(truth.variance_diag, pop.grid());
      for (double v : truth.variance_diag) result.true_sd.push_back(std::sqrt(std::max(v, 0.0)));
      run_design(pop, spec, i, resolved.design, truth_mean, truth.variance_diag, threads, result);
    } catch (const Error& e) {
      result.error = e.what();
    }
    report.designs.push_back(std::move(result));
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

DesignRanking compare_designs(const McReport& report) {
  if (report.designs.size() < 2) {
    throw InvalidArgumentError("design comparison needs at least two designs");
  }
  DesignRanking ranking;
  const std::size_t count = report.designs.size();
  ranking.by_mean_loss.resize(count);
  std::iota(ranking.by_mean_loss.begin(), ranking.by_mean_loss.end(), 0);
  ranking.by_integrated_variance = ranking.by_mean_loss;
  auto failed = [&](std::size_t i) { return report.designs[i].error.has_value(); };
  std::stable_sort(ranking.by_mean_loss.begin(), ranking.by_mean_loss.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (failed(a) != failed(b)) return failed(b);
                     return report.designs[a].loss_mu.mean < report.designs[b].loss_mu.mean;
                   });
  std::stable_sort(ranking.by_integrated_variance.begin(), ranking.by_integrated_variance.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (failed(a) != failed(b)) return failed(b);
                     return report.designs[a].integrated_true_variance <
                            report.designs[b].integrated_true_variance;
                   });
  for (const auto& d : report.designs) {
    ranking.names.push_back(d.name);
    ranking.true_sd.push_back(d.true_sd);
  }
  return ranking;
}

}  // namespace curvesurvey
