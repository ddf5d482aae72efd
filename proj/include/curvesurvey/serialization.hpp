#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvesurvey/allocate.hpp"
#include "curvesurvey/bands.hpp"
#include "curvesurvey/estimate.hpp"
#include "curvesurvey/mc.hpp"
#include "curvesurvey/population.hpp"

namespace curvesurvey {

using nlohmann::json;
using nlohmann::ordered_json;

// Reports carry 12 significant digits.
std::string format_number(double x);
double round_significant(double x);

// {"kind":"srswor","n":...}
// {"kind":"stratified","allocation":[n_1,...,n_H]}
// {"kind":"stratified","rule":"proportional"|"optimal","n":...}
// An optional "name" is kept; otherwise one is derived from the content.
DesignConfig design_config_from_json(const json& j);
ordered_json to_json(const DesignConfig& config);

// {"population": {"file": path} | {"synthetic": {...}},
//  "designs": [...], "replicates": R, "alphas": [...], "master_seed": s}
struct ExperimentConfig {
  std::optional<std::string> population_file;
  std::optional<SyntheticSpec> synthetic;
  ExperimentSpec spec;
};

ExperimentConfig experiment_config_from_json(const json& j);
SyntheticSpec synthetic_spec_from_json(const json& j);
ordered_json to_json(const SyntheticSpec& spec);

// {"rule":..., "n_h":[...], "S_h":[...], "objective":...}
ordered_json to_json(const Allocation& allocation, std::span<const StratumSummary> summaries);

ordered_json to_json(const McReport& report);

// t, sd_<design>...
void write_sd_tsv(std::ostream& out, const McReport& report);
// t, mean_<design>, lower_<design>, upper_<design>...
void write_envelope_tsv(std::ostream& out, const McReport& report);

// t, mean, var, sd, then lower_<kind>_<alpha>, upper_<kind>_<alpha> per band.
void write_estimate_table(std::ostream& out, const FunctionalEstimate& estimate,
                          std::span<const ConfidenceBand> bands);

}  // namespace curvesurvey
