#include "curvesurvey/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "curvesurvey/allocate.hpp"
#include "curvesurvey/bands.hpp"
#include "curvesurvey/design.hpp"
#include "curvesurvey/errors.hpp"
#include "curvesurvey/estimate.hpp"
#include "curvesurvey/mc.hpp"
#include "curvesurvey/population.hpp"
#include "curvesurvey/serialization.hpp"

namespace curvesurvey {

namespace {

namespace fs = std::filesystem;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgumentError(path.string() + ": " + e.what());
  }
}

// A design argument is either inline JSON or a path to a JSON file.
json read_design_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && arg[first] == '{') {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw InvalidArgumentError(std::string("design JSON: ") + e.what());
    }
  }
  return read_json_file(arg);
}

template <class Writer>
void write_file(const fs::path& path, Writer writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  writer(out);
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::optional<std::size_t> population_size, grid_size, strata;
  std::optional<std::uint64_t> seed;
  std::optional<double> amplitude_spread, noise_smoothness;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  if (!a.config.empty()) spec = synthetic_spec_from_json(read_json_file(a.config));
  if (a.population_size) spec.population_size = *a.population_size;
  if (a.grid_size) spec.grid_size = *a.grid_size;
  if (a.strata) spec.strata = *a.strata;
  if (a.seed) spec.seed = *a.seed;
  if (a.amplitude_spread) spec.amplitude_spread = *a.amplitude_spread;
  if (a.noise_smoothness) spec.noise_smoothness = *a.noise_smoothness;
  validate(spec);
  const CurvePopulation pop = generate_synthetic(spec);
  save_csv(a.out, pop);
  out << "wrote " << pop.size() << " curves x " << pop.grid_size() << " points to " << a.out
      << '\n';
  return 0;
}

struct StratifyArgs {
  std::string pop, aux, out;
  std::size_t strata = 4;
};

int cmd_stratify(const StratifyArgs& a, std::ostream& out) {
  const CurvePopulation pop = load_csv(a.pop);
  std::optional<CurvePopulation> aux;
  if (!a.aux.empty()) aux = load_csv(a.aux);
  const CurvePopulation labelled = stratify_by_max_level(pop, a.strata, aux ? &*aux : nullptr);
  save_csv(a.out, labelled);
  out << "strata sizes:";
  for (std::size_t s : labelled.stratum_sizes()) out << ' ' << s;
  out << '\n';
  return 0;
}

struct AllocateArgs {
  std::string pop, out;
  std::size_t n = 0;
  std::vector<std::size_t> manual;
};

int cmd_allocate(const AllocateArgs& a, std::ostream& out, std::ostream& err) {
  const CurvePopulation pop = load_csv(a.pop);
  if (!pop.has_strata()) throw InvalidArgumentError("strata required: population has no stratum column");
  const auto summaries = stratum_summaries(pop);
  std::vector<Allocation> allocations{proportional_allocation(summaries, a.n),
                                      optimal_allocation(summaries, a.n)};
  if (!a.manual.empty()) allocations.push_back(manual_allocation(summaries, a.manual));

  ordered_json j;
  j["population_size"] = pop.size();
  j["n"] = a.n;
  j["allocations"] = ordered_json::array();
  for (const auto& alloc : allocations) {
    print_warnings(err, alloc.warnings);
    j["allocations"].push_back(to_json(alloc, summaries));
  }
  if (a.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_json(a.out, j);
  }
  return 0;
}

struct EstimateArgs {
  std::string pop, design, out, band = "global";
  std::uint64_t seed = 1;
  std::vector<double> alphas{0.05};
  bool diag_only = true;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const CurvePopulation pop = load_csv(a.pop);
  const DesignConfig config = design_config_from_json(read_design_argument(a.design));
  const ResolvedDesign resolved = resolve_design(pop, config);
  print_warnings(err, resolved.design->warnings());
  if (!resolved.design->variance_estimable()) {
    throw VarianceInestimableError("design " + resolved.design->describe() +
                                   " has a stratum with n_h < 2; variance is not estimable");
  }
  const Sample sample = draw(resolved.design, a.seed);
  EstimateOptions options;
  options.diagonal_only = a.diag_only;
  const FunctionalEstimate est = estimate(pop, sample, options);

  std::vector<BandKind> kinds;
  if (a.band == "global" || a.band == "both") kinds.push_back(BandKind::global);
  if (a.band == "pointwise" || a.band == "both") kinds.push_back(BandKind::pointwise);
  std::vector<ConfidenceBand> bands;
  for (BandKind kind : kinds) {
    for (double alpha : a.alphas) bands.push_back(build_band(est, alpha, kind));
  }
  if (est.negative_variance_count > 0) {
    err << "warning: " << est.negative_variance_count
        << " grid points have a negative variance estimate; band widths clamp them to 0\n";
  }

  const fs::path table(a.out);
  write_file(table, [&](std::ostream& o) { write_estimate_table(o, est, bands); });

  const TrueVariance truth = true_covariance(pop, *resolved.design);
  ordered_json side;
  side["design"] = to_json(config);
  side["description"] = resolved.design->describe();
  side["seed"] = a.seed;
  side["sample_size"] = sample.size();
  side["allocation"] = resolved.design->allocation();
  std::vector<std::size_t> positions;
  std::vector<std::string> ids;
  for (std::size_t k : sample.indices) {
    positions.push_back(k + 1);
    ids.push_back(pop.ids()[k]);
  }
  side["sample_positions"] = positions;
  side["sample_ids"] = ids;
  side["integrated_true_variance"] =
      round_significant(trapezoid_integral(truth.variance_diag, pop.grid()));
  side["integrated_estimated_variance"] =
      round_significant(trapezoid_integral(est.variance_diag, pop.grid()));
  side["negative_variance_count"] = est.negative_variance_count;
  if (resolved.allocation) side["allocation_report"] = to_json(*resolved.allocation, stratum_summaries(pop));
  side["warnings"] = resolved.design->warnings();
  fs::path sidecar = table;
  sidecar += ".json";
  write_json(sidecar, side);

  if (est.covariance) {
    fs::path cov_path = table;
    cov_path += ".cov.csv";
    write_file(cov_path, [&](std::ostream& o) {
      const auto& m = *est.covariance;
      for (std::size_t i = 0; i < m.dim(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j) o << (j ? "," : "") << format_number(m(i, j));
        o << '\n';
      }
    });
  }
  out << "estimated mean curve from " << sample.size() << " units; wrote " << a.out << '\n';
  return 0;
}

struct ExperimentArgs {
  std::string config, pop, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::vector<double> alphas;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = experiment_config_from_json(read_json_file(a.config));
  if (a.seed) cfg.spec.master_seed = *a.seed;
  if (a.replicates) cfg.spec.replicates = *a.replicates;
  if (!a.alphas.empty()) cfg.spec.alphas = a.alphas;
  validate(cfg.spec);

  std::optional<CurvePopulation> pop;
  if (!a.pop.empty()) {
    pop = load_csv(a.pop);
  } else if (cfg.population_file) {
    fs::path p(*cfg.population_file);
    if (p.is_relative()) p = fs::path(a.config).parent_path() / p;
    pop = load_csv(p);
  } else if (cfg.synthetic) {
    pop = generate_synthetic(*cfg.synthetic);
  } else {
    throw InvalidArgumentError("experiment needs a population (--pop or a 'population' entry)");
  }

  const McReport report = run_experiment(*pop, cfg.spec);
  const fs::path dir(a.out);
  write_json(dir / "report.json", to_json(report));
  write_file(dir / "sd.tsv", [&](std::ostream& o) { write_sd_tsv(o, report); });
  write_file(dir / "envelope.tsv", [&](std::ostream& o) { write_envelope_tsv(o, report); });

  int failed = 0;
  for (const auto& d : report.designs) {
    if (d.error) {
      err << "design '" << d.name << "' failed: " << *d.error << '\n';
      ++failed;
    }
  }
  out << "ran " << report.replicates << " replicates of " << report.designs.size()
      << " designs in " << report.elapsed_seconds << " s; wrote " << dir.string() << '\n';
  return failed ? 3 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Horvitz-Thompson estimation of mean curves under survey sampling", "curvesurvey"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic curve population");
  generate->add_option("--config", gen.config, "SyntheticSpec JSON file");
  generate->add_option("--N", gen.population_size, "population size");
  generate->add_option("--d", gen.grid_size, "grid size");
  generate->add_option("--H", gen.strata, "number of strata");
  generate->add_option("--seed", gen.seed, "RNG seed");
  generate->add_option("--amplitude-spread", gen.amplitude_spread);
  generate->add_option("--noise-smoothness", gen.noise_smoothness);
  generate->add_option("--out", gen.out, "output population CSV")->required();

  StratifyArgs strat;
  auto* stratify = app.add_subcommand("stratify", "Label units by quantile bins of their peak level");
  stratify->add_option("--pop", strat.pop, "population CSV")->required();
  stratify->add_option("--strata", strat.strata, "number of strata")->capture_default_str();
  stratify->add_option("--aux", strat.aux, "CSV whose peaks define the strata (same units)");
  stratify->add_option("--out", strat.out, "output population CSV")->required();

  AllocateArgs alloc;
  auto* allocate = app.add_subcommand("allocate", "Proportional and optimal stratum allocations");
  allocate->add_option("--pop", alloc.pop, "stratified population CSV")->required();
  allocate->add_option("--n", alloc.n, "total sample size")->required();
  allocate->add_option("--manual", alloc.manual, "manual allocation to evaluate")->delimiter(',');
  allocate->add_option("--out", alloc.out, "output JSON (stdout when omitted)");

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Draw one sample and estimate the mean curve");
  estimate_cmd->add_option("--pop", est.pop, "population CSV")->required();
  estimate_cmd->add_option("--design", est.design, "design JSON (inline or file)")->required();
  estimate_cmd->add_option("--seed", est.seed, "sample seed")->capture_default_str();
  estimate_cmd->add_option("--alpha", est.alphas, "risk levels")->delimiter(',')->capture_default_str();
  estimate_cmd->add_option("--band", est.band, "global, pointwise or both")
      ->check(CLI::IsMember({"global", "pointwise", "both"}))
      ->capture_default_str();
  estimate_cmd->add_option("--diag-only", est.diag_only, "skip the full covariance surface")
      ->capture_default_str();
  estimate_cmd->add_option("--out", est.out, "output table CSV")->required();

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo comparison of designs");
  experiment->add_option("--config", exp.config, "experiment JSON")->required();
  experiment->add_option("--pop", exp.pop, "population CSV (overrides the config)");
  experiment->add_option("--seed", exp.seed, "master seed");
  experiment->add_option("--replicates", exp.replicates, "number of replicates");
  experiment->add_option("--alpha", exp.alphas, "risk levels")->delimiter(',');
  experiment->add_option("--out", exp.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*stratify) return cmd_stratify(strat, out);
    if (*allocate) return cmd_allocate(alloc, out, err);
    if (*estimate_cmd) return cmd_estimate(est, out, err);
    if (*experiment) return cmd_experiment(exp, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace curvesurvey
