#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curvesurvey {

// Strictly increasing observation instants t_1 < ... < t_d, d >= 2.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points);

  // t_j = j for j = 0..d-1.
  static TimeGrid uniform(std::size_t d);

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t j) const { return points_[j]; }
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }
  double length() const noexcept { return back() - front(); }

  // Index i of the cell [t_i, t_{i+1}] containing t; the last cell for t = t_d.
  std::size_t cell_of(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
};

// The finite population U_N: N curves observed on a common grid, with optional
// stratum labels in {1..H}. Values are stored row-major, one row per unit.
class CurvePopulation {
 public:
  CurvePopulation(TimeGrid grid, std::vector<double> values,
                  std::vector<int> strata = {}, std::vector<std::string> ids = {});

  // Convenience for small literal populations.
  static CurvePopulation from_rows(TimeGrid grid,
                                   const std::vector<std::vector<double>>& rows,
                                   std::vector<int> strata = {});

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t grid_size() const noexcept { return grid_.size(); }
  const TimeGrid& grid() const noexcept { return grid_; }

  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(values_).subspan(k * grid_.size(), grid_.size());
  }
  double value(std::size_t k, std::size_t j) const { return values_[k * grid_.size() + j]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  bool has_strata() const noexcept { return !strata_.empty(); }
  const std::vector<int>& strata() const noexcept { return strata_; }
  std::size_t stratum_count() const noexcept { return stratum_count_; }
  // N_h for h = 1..H, stored at index h-1.
  std::vector<std::size_t> stratum_sizes() const;

  CurvePopulation with_strata(std::vector<int> strata) const;
  CurvePopulation without_strata() const;

  bool operator==(const CurvePopulation&) const = default;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  std::vector<int> strata_;
  std::vector<std::string> ids_;
  std::size_t stratum_count_ = 0;
};

// Piecewise-linear interpolant of a curve observed on `grid`, evaluated at t.
double interpolate(std::span<const double> curve, const TimeGrid& grid, double t);

// Trapezoid rule over [t_1, t_d].
double trapezoid_integral(std::span<const double> f, const TimeGrid& grid);

// mu_N(t_j) = (1/N) sum_k Y_k(t_j).
std::vector<double> population_mean(const CurvePopulation& pop);

struct PopulationCsvFormat {
  char delimiter = ',';
};

CurvePopulation read_csv(std::istream& in, PopulationCsvFormat format = {});
CurvePopulation load_csv(const std::filesystem::path& path, PopulationCsvFormat format = {});

// Values are written in shortest round-trip form, so read_csv(write_csv(p)) == p.
void write_csv(std::ostream& out, const CurvePopulation& pop, PopulationCsvFormat format = {});
void save_csv(const std::filesystem::path& path, const CurvePopulation& pop,
              PopulationCsvFormat format = {});

struct SyntheticSpec {
  std::size_t population_size = 2000;
  std::size_t grid_size = 48;
  std::size_t strata = 4;
  std::uint64_t seed = 1;
  // Standard deviation of the log-amplitude across units.
  double amplitude_spread = 0.6;
  // Decay exponent of the perturbation spectrum; larger is smoother.
  double noise_smoothness = 1.0;
};

void validate(const SyntheticSpec& spec);

// Load-curve-like population: unit k is a_k * (profile(t) + perturbation_k(t))
// with a_k = exp(amplitude_spread * z_k), z_k standard normal. The shared
// profile has a 48-step daily period plus a slow weekly component; the
// perturbation is a random low-frequency Fourier series. Strata are the H
// equal-size rank bins of z_k, so stratum means increase with the label.
CurvePopulation generate_synthetic(const SyntheticSpec& spec);

// Labels units 1..H by the rank of their maximum level (over `auxiliary` when
// given, else over the population's own values). Ties are ordered by unit
// index, and rank r goes to stratum floor(r * H / N) + 1.
CurvePopulation stratify_by_max_level(const CurvePopulation& pop, std::size_t strata,
                                      const CurvePopulation* auxiliary = nullptr);

// Half the slope of log mean-squared increment against log lag over the
// dyadic lags 1, 2, 4, ... (in grid steps). nullopt when some lag has zero
// mean-squared increment.
std::optional<double> estimate_holder_beta(const CurvePopulation& pop);

}  // namespace curvesurvey
