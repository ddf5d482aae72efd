#include "curvesurvey/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "curvesurvey/errors.hpp"

namespace curvesurvey {

std::string format_number(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

double round_significant(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

namespace {

ordered_json rounded(double x) { return round_significant(x); }

ordered_json rounded(std::span<const double> xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(round_significant(x));
  return a;
}

template <class F>
auto guarded(const char* what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("invalid ") + what + ": " + e.what());
  }
}

std::size_t positive_size(const json& j, const char* key) {
  const auto v = j.at(key).get<long long>();
  if (v < 1) throw InvalidArgumentError(std::string("'") + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

DesignConfig design_config_from_json(const json& j) {
  return guarded("design", [&] {
    if (!j.is_object()) throw InvalidArgumentError("design must be a JSON object");
    DesignConfig c;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "srswor") {
      c.recipe = DesignRecipe::srswor;
      c.sample_size = positive_size(j, "n");
      c.name = "srswor";
    } else if (kind == "stratified") {
      if (j.contains("allocation")) {
        c.recipe = DesignRecipe::stratified_manual;
        for (const auto& v : j.at("allocation")) {
          const auto n_h = v.get<long long>();
          if (n_h < 1) throw InvalidArgumentError("allocation entries must be >= 1");
          c.allocation.push_back(static_cast<std::size_t>(n_h));
        }
        if (c.allocation.empty()) throw InvalidArgumentError("allocation is empty");
        for (std::size_t n_h : c.allocation) c.sample_size += n_h;
        c.name = "stratified";
      } else {
        const auto rule = j.at("rule").get<std::string>();
        if (rule == "proportional") {
          c.recipe = DesignRecipe::stratified_proportional;
        } else if (rule == "optimal") {
          c.recipe = DesignRecipe::stratified_optimal;
        } else {
          throw InvalidArgumentError("unknown allocation rule '" + rule + "'");
        }
        c.sample_size = positive_size(j, "n");
        c.name = rule;
      }
    } else {
      throw InvalidArgumentError("unknown design kind '" + kind + "'");
    }
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    return c;
  });
}

ordered_json to_json(const DesignConfig& config) {
  ordered_json j;
  j["name"] = config.name;
  switch (config.recipe) {
    case DesignRecipe::srswor:
      j["kind"] = "srswor";
      j["n"] = config.sample_size;
      break;
    case DesignRecipe::stratified_manual:
      j["kind"] = "stratified";
      j["allocation"] = config.allocation;
      break;
    case DesignRecipe::stratified_proportional:
    case DesignRecipe::stratified_optimal:
      j["kind"] = "stratified";
      j["rule"] = config.recipe == DesignRecipe::stratified_optimal ? "optimal" : "proportional";
      j["n"] = config.sample_size;
      break;
  }
  return j;
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  return guarded("synthetic spec", [&] {
    SyntheticSpec s;
    if (!j.is_object()) throw InvalidArgumentError("synthetic spec must be a JSON object");
    auto size_field = [&](const char* key, std::size_t& out) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<long long>();
      if (v < 0) throw InvalidArgumentError(std::string("'") + key + "' must be >= 0");
      out = static_cast<std::size_t>(v);
    };
    size_field("N", s.population_size);
    size_field("d", s.grid_size);
    size_field("H", s.strata);
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("amplitude_spread")) s.amplitude_spread = j.at("amplitude_spread").get<double>();
    if (j.contains("noise_smoothness")) s.noise_smoothness = j.at("noise_smoothness").get<double>();
    validate(s);
    return s;
  });
}

ordered_json to_json(const SyntheticSpec& spec) {
  ordered_json j;
  j["N"] = spec.population_size;
  j["d"] = spec.grid_size;
  j["H"] = spec.strata;
  j["seed"] = spec.seed;
  j["amplitude_spread"] = spec.amplitude_spread;
  j["noise_smoothness"] = spec.noise_smoothness;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  return guarded("experiment spec", [&] {
    if (!j.is_object()) throw InvalidArgumentError("experiment spec must be a JSON object");
    ExperimentConfig c;
    if (j.contains("population")) {
      const auto& p = j.at("population");
      if (p.contains("file")) {
        c.population_file = p.at("file").get<std::string>();
      } else if (p.contains("synthetic")) {
        c.synthetic = synthetic_spec_from_json(p.at("synthetic"));
      } else {
        throw InvalidArgumentError("population needs 'file' or 'synthetic'");
      }
    }
    for (const auto& d : j.at("designs")) c.spec.designs.push_back(design_config_from_json(d));
    if (j.contains("replicates")) c.spec.replicates = positive_size(j, "replicates");
    if (j.contains("alphas")) c.spec.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("master_seed")) c.spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("threads")) c.spec.threads = j.at("threads").get<unsigned>();
    validate(c.spec);
    return c;
  });
}

ordered_json to_json(const Allocation& allocation, std::span<const StratumSummary> summaries) {
  ordered_json j;
  j["rule"] = to_string(allocation.rule);
  j["n_h"] = allocation.sizes;
  std::vector<double> s;
  std::vector<std::size_t> sizes;
  for (const auto& x : summaries) {
    s.push_back(x.dispersion);
    sizes.push_back(x.size);
  }
  j["N_h"] = sizes;
  j["S_h"] = rounded(s);
  if (!allocation.real_sizes.empty()) j["n_h_real"] = rounded(allocation.real_sizes);
  j["objective"] = rounded(allocation.objective);
  if (!allocation.warnings.empty()) j["warnings"] = allocation.warnings;
  return j;
}

namespace {

ordered_json to_json(const LossSummary& s) {
  ordered_json j;
  j["mean"] = rounded(s.mean);
  j["q1"] = rounded(s.q1);
  j["median"] = rounded(s.median);
  j["q3"] = rounded(s.q3);
  return j;
}

}  // namespace

ordered_json to_json(const McReport& report) {
  ordered_json j;
  j["population_size"] = report.population_size;
  j["grid_size"] = report.grid.size();
  j["replicates"] = report.replicates;
  j["alphas"] = rounded(report.alphas);
  j["master_seed"] = report.master_seed;
  ordered_json designs = ordered_json::array();
  for (const auto& d : report.designs) {
    ordered_json e;
    e["name"] = d.name;
    e["description"] = d.description;
    e["sample_size"] = d.sample_size;
    e["allocation"] = d.allocation;
    if (d.error) {
      e["error"] = *d.error;
      designs.push_back(std::move(e));
      continue;
    }
    e["loss_mu"] = to_json(d.loss_mu);
    e["loss_gamma"] = to_json(d.loss_gamma);
    ordered_json cov = ordered_json::array();
    for (const auto& c : d.coverage) {
      ordered_json x;
      x["alpha"] = rounded(c.alpha);
      x["global"] = rounded(c.global);
      x["pointwise_average"] = rounded(c.pointwise_average);
      cov.push_back(std::move(x));
    }
    e["coverage"] = std::move(cov);
    e["integrated_true_variance"] = rounded(d.integrated_true_variance);
    e["mean_sup_error_mu"] = rounded(d.mean_sup_error_mu);
    e["mean_sup_error_gamma"] = rounded(d.mean_sup_error_gamma);
    e["negative_variance_replicates"] = d.negative_variance_replicates;
    designs.push_back(std::move(e));
  }
  j["designs"] = std::move(designs);
  if (report.designs.size() >= 2) {
    const DesignRanking ranking = compare_designs(report);
    ordered_json r;
    r["by_mean_loss"] = ordered_json::array();
    for (std::size_t i : ranking.by_mean_loss) r["by_mean_loss"].push_back(ranking.names[i]);
    r["by_integrated_variance"] = ordered_json::array();
    for (std::size_t i : ranking.by_integrated_variance) {
      r["by_integrated_variance"].push_back(ranking.names[i]);
    }
    j["ranking"] = std::move(r);
  }
  return j;
}

void write_sd_tsv(std::ostream& out, const McReport& report) {
  out << "t";
  for (const auto& d : report.designs) out << "\tsd_" << d.name;
  out << '\n';
  for (std::size_t j = 0; j < report.grid.size(); ++j) {
    out << format_number(report.grid[j]);
    for (const auto& d : report.designs) {
      out << '\t' << (d.true_sd.empty() ? std::string("nan") : format_number(d.true_sd[j]));
    }
    out << '\n';
  }
}

void write_envelope_tsv(std::ostream& out, const McReport& report) {
  out << "t";
  for (const auto& d : report.designs) {
    out << "\tmean_" << d.name << "\tlower_" << d.name << "\tupper_" << d.name;
  }
  out << '\n';
  for (std::size_t j = 0; j < report.grid.size(); ++j) {
    out << format_number(report.grid[j]);
    for (const auto& d : report.designs) {
      if (d.estimate_mean.empty()) {
        out << "\tnan\tnan\tnan";
        continue;
      }
      out << '\t' << format_number(d.estimate_mean[j]) << '\t'
          << format_number(d.envelope_lower[j]) << '\t' << format_number(d.envelope_upper[j]);
    }
    out << '\n';
  }
}

void write_estimate_table(std::ostream& out, const FunctionalEstimate& estimate,
                          std::span<const ConfidenceBand> bands) {
  out << "t,mean,var,sd";
  for (const auto& b : bands) {
    const std::string suffix = std::string(to_string(b.kind)) + "_" + format_number(b.alpha);
    out << ",lower_" << suffix << ",upper_" << suffix;
  }
  out << '\n';
  for (std::size_t j = 0; j < estimate.mean.size(); ++j) {
    const double v = estimate.has_variance() ? estimate.variance_diag[j] : std::nan("");
    out << format_number(estimate.grid[j]) << ',' << format_number(estimate.mean[j]) << ','
        << format_number(v) << ',' << format_number(std::sqrt(std::max(v, 0.0)));
    for (const auto& b : bands) {
      out << ',' << format_number(b.lower(j)) << ',' << format_number(b.upper(j));
    }
    out << '\n';
  }
}

}  // namespace curvesurvey
