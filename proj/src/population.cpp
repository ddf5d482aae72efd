#include "curvesurvey/population.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string_view>

#include "curvesurvey/errors.hpp"
#include "curvesurvey/numeric.hpp"
#include "curvesurvey/rng.hpp"

namespace curvesurvey {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgumentError("time grid needs at least 2 points");
  for (std::size_t j = 0; j < points_.size(); ++j) {
    if (!std::isfinite(points_[j])) throw InvalidArgumentError("time grid has a non-finite point");
    if (j > 0 && !(points_[j] > points_[j - 1])) {
      throw InvalidArgumentError("time grid is not strictly increasing at index " +
                                 std::to_string(j));
    }
  }
}

TimeGrid TimeGrid::uniform(std::size_t d) {
  std::vector<double> pts(d);
  std::iota(pts.begin(), pts.end(), 0.0);
  return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::cell_of(double t) const {
  if (!(t >= front() && t <= back())) {
    throw OutOfRangeError("t = " + std::to_string(t) + " outside [" + std::to_string(front()) +
                          ", " + std::to_string(back()) + "]");
  }
  const auto it = std::upper_bound(points_.begin(), points_.end(), t);
  const auto i = static_cast<std::size_t>(it - points_.begin());
  return std::min(i == 0 ? 0 : i - 1, points_.size() - 2);
}

CurvePopulation::CurvePopulation(TimeGrid grid, std::vector<double> values,
                                 std::vector<int> strata, std::vector<std::string> ids)
    : grid_(std::move(grid)), values_(std::move(values)), strata_(std::move(strata)),
      ids_(std::move(ids)) {
  const std::size_t d = grid_.size();
  if (values_.empty() || values_.size() % d != 0) {
    throw ShapeError("value count " + std::to_string(values_.size()) +
                     " is not a positive multiple of the grid size " + std::to_string(d));
  }
  const std::size_t n_units = values_.size() / d;
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgumentError("population has a non-finite value");
  }
  if (ids_.empty()) {
    ids_.reserve(n_units);
    for (std::size_t k = 0; k < n_units; ++k) ids_.push_back(std::to_string(k + 1));
  } else if (ids_.size() != n_units) {
    throw ShapeError("unit id count does not match the number of rows");
  }
  if (!strata_.empty()) {
    if (strata_.size() != n_units) throw ShapeError("stratum label count does not match rows");
    const int max_label = *std::max_element(strata_.begin(), strata_.end());
    if (*std::min_element(strata_.begin(), strata_.end()) < 1) {
      throw InvalidArgumentError("stratum labels must be >= 1");
    }
    stratum_count_ = static_cast<std::size_t>(max_label);
    const auto sizes = stratum_sizes();
    for (std::size_t h = 0; h < sizes.size(); ++h) {
      if (sizes[h] == 0) {
        throw InvalidArgumentError("stratum " + std::to_string(h + 1) + " is empty");
      }
    }
  }
}

CurvePopulation CurvePopulation::from_rows(TimeGrid grid,
                                           const std::vector<std::vector<double>>& rows,
                                           std::vector<int> strata) {
  std::vector<double> values;
  values.reserve(rows.size() * grid.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != grid.size()) {
      throw ShapeError("row " + std::to_string(k) + " has " + std::to_string(rows[k].size()) +
                       " values, grid has " + std::to_string(grid.size()));
    }
    values.insert(values.end(), rows[k].begin(), rows[k].end());
  }
  return CurvePopulation(std::move(grid), std::move(values), std::move(strata));
}

std::vector<std::size_t> CurvePopulation::stratum_sizes() const {
  std::vector<std::size_t> sizes(stratum_count_, 0);
  for (int h : strata_) ++sizes[static_cast<std::size_t>(h - 1)];
  return sizes;
}

CurvePopulation CurvePopulation::with_strata(std::vector<int> strata) const {
  return CurvePopulation(grid_, values_, std::move(strata), ids_);
}

CurvePopulation CurvePopulation::without_strata() const {
  return CurvePopulation(grid_, values_, {}, ids_);
}

double interpolate(std::span<const double> curve, const TimeGrid& grid, double t) {
  if (curve.size() != grid.size()) {
    throw ShapeError("curve length " + std::to_string(curve.size()) + " != grid size " +
                     std::to_string(grid.size()));
  }
  const std::size_t i = grid.cell_of(t);
  const double y0 = curve[i];
  const double y1 = curve[i + 1];
  if (t == grid[i]) return y0;
  if (t == grid[i + 1]) return y1;
  const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
  return std::clamp(y0 + w * (y1 - y0), std::min(y0, y1), std::max(y0, y1));
}

double trapezoid_integral(std::span<const double> f, const TimeGrid& grid) {
  if (f.size() != grid.size()) {
    throw ShapeError("integrand length " + std::to_string(f.size()) + " != grid size " +
                     std::to_string(grid.size()));
  }
  CompensatedSum acc;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) {
    acc.add(0.5 * (f[j] + f[j + 1]) * (grid[j + 1] - grid[j]));
  }
  return acc.value();
}

std::vector<double> population_mean(const CurvePopulation& pop) {
  const std::size_t d = pop.grid_size();
  std::vector<CompensatedSum> acc(d);
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const auto y = pop.row(k);
    for (std::size_t j = 0; j < d; ++j) acc[j].add(y[j]);
  }
  std::vector<double> mean(d);
  const auto n = static_cast<double>(pop.size());
  for (std::size_t j = 0; j < d; ++j) mean[j] = acc[j].value() / n;
  return mean;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view token, std::size_t line, const char* what) {
  double v = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (token.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(line, std::string("malformed ") + what + " '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(line, std::string("non-finite ") + what + " '" + std::string(token) + "'");
  }
  return v;
}

int parse_label(std::string_view token, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || v < 1) {
    throw ParseError(line, "stratum label must be a positive integer, got '" +
                               std::string(token) + "'");
  }
  return v;
}

void append_number(std::string& out, double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, ptr);
}

}  // namespace

CurvePopulation read_csv(std::istream& in, PopulationCsvFormat format) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw ParseError(1, "empty file, expected header");
  const auto header = split(line, format.delimiter);
  if (header.empty() || header[0] != "t") throw ParseError(1, "header must start with 't'");
  const bool has_strata = header.back() == "stratum";
  const std::size_t d = header.size() - 1 - (has_strata ? 1 : 0);
  if (d < 2) throw ParseError(1, "header declares fewer than 2 time points");
  std::vector<double> points;
  points.reserve(d);
  for (std::size_t j = 1; j <= d; ++j) points.push_back(parse_double(header[j], 1, "time point"));
  std::optional<TimeGrid> grid;
  try {
    grid.emplace(std::move(points));
  } catch (const InvalidArgumentError& e) {
    throw ParseError(1, e.what());
  }

  std::vector<double> values;
  std::vector<int> strata;
  std::vector<std::string> ids;
  const std::size_t expected = 1 + d + (has_strata ? 1 : 0);
  while (next_line()) {
    if (line.empty()) continue;
    const auto cells = split(line, format.delimiter);
    if (cells.size() != expected) {
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, found " +
                                    std::to_string(cells.size()));
    }
    if (cells[0].empty()) throw ParseError(line_no, "empty unit id");
    ids.emplace_back(cells[0]);
    for (std::size_t j = 1; j <= d; ++j) values.push_back(parse_double(cells[j], line_no, "value"));
    if (has_strata) strata.push_back(parse_label(cells.back(), line_no));
  }
  if (ids.empty()) throw ParseError(line_no + 1, "no population rows");
  try {
    return CurvePopulation(std::move(*grid), std::move(values), std::move(strata), std::move(ids));
  } catch (const InvalidArgumentError& e) {
    throw ParseError(line_no, e.what());
  }
}

CurvePopulation load_csv(const std::filesystem::path& path, PopulationCsvFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in, format);
}

void write_csv(std::ostream& out, const CurvePopulation& pop, PopulationCsvFormat format) {
  const char sep = format.delimiter;
  std::string buf = "t";
  for (double t : pop.grid().points()) {
    buf += sep;
    append_number(buf, t);
  }
  if (pop.has_strata()) {
    buf += sep;
    buf += "stratum";
  }
  buf += '\n';
  out << buf;
  for (std::size_t k = 0; k < pop.size(); ++k) {
    buf = pop.ids()[k];
    for (double v : pop.row(k)) {
      buf += sep;
      append_number(buf, v);
    }
    if (pop.has_strata()) {
      buf += sep;
      buf += std::to_string(pop.strata()[k]);
    }
    buf += '\n';
    out << buf;
  }
}

void save_csv(const std::filesystem::path& path, const CurvePopulation& pop,
              PopulationCsvFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, pop, format);
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic populations

void validate(const SyntheticSpec& spec) {
  if (spec.strata < 1) throw InvalidArgumentError("synthetic spec: H must be >= 1");
  if (spec.population_size < spec.strata) {
    throw InvalidArgumentError("synthetic spec: N must be >= H");
  }
  if (spec.grid_size < 2) throw InvalidArgumentError("synthetic spec: d must be >= 2");
  if (!(spec.amplitude_spread >= 0.0) || !std::isfinite(spec.amplitude_spread)) {
    throw InvalidArgumentError("synthetic spec: amplitude_spread must be finite and >= 0");
  }
  if (!(spec.noise_smoothness > 0.0) || !std::isfinite(spec.noise_smoothness)) {
    throw InvalidArgumentError("synthetic spec: noise_smoothness must be finite and > 0");
  }
}

namespace {

constexpr double kStepsPerDay = 48.0;
constexpr double kStepsPerWeek = 7 * kStepsPerDay;
constexpr std::size_t kHarmonics = 8;
constexpr double kPerturbationScale = 0.5;

double load_profile(double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 1.5 + 0.6 * std::sin(two_pi * (t - 14.0) / kStepsPerDay) +
         0.2 * std::sin(2.0 * two_pi * (t - 14.0) / kStepsPerDay) +
         0.25 * std::cos(two_pi * t / kStepsPerWeek);
}

}  // namespace

CurvePopulation generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t n_units = spec.population_size;
  const std::size_t d = spec.grid_size;
  const TimeGrid grid = TimeGrid::uniform(d);
  Rng rng(spec.seed);

  std::vector<double> z(n_units);
  for (double& v : z) v = rng.normal();

  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
  std::vector<int> strata(n_units);
  for (std::size_t r = 0; r < n_units; ++r) {
    strata[order[r]] = static_cast<int>(r * spec.strata / n_units) + 1;
  }

  std::vector<double> spectrum(kHarmonics);
  double norm = 0;
  for (std::size_t m = 0; m < kHarmonics; ++m) {
    spectrum[m] = std::pow(static_cast<double>(m + 1), -spec.noise_smoothness);
    norm += spectrum[m] * spectrum[m];
  }
  for (double& s : spectrum) s /= std::sqrt(norm);

  std::vector<double> profile(d);
  for (std::size_t j = 0; j < d; ++j) profile[j] = load_profile(grid[j]);

  const double period = static_cast<double>(d);
  std::vector<double> values(n_units * d);
  std::vector<double> cos_coef(kHarmonics), sin_coef(kHarmonics);
  for (std::size_t k = 0; k < n_units; ++k) {
    for (std::size_t m = 0; m < kHarmonics; ++m) {
      cos_coef[m] = spectrum[m] * rng.normal();
      sin_coef[m] = spectrum[m] * rng.normal();
    }
    const double amplitude = std::exp(spec.amplitude_spread * z[k]);
    for (std::size_t j = 0; j < d; ++j) {
      double perturbation = 0;
      for (std::size_t m = 0; m < kHarmonics; ++m) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(m + 1) * grid[j] / period;
        perturbation += cos_coef[m] * std::cos(phase) + sin_coef[m] * std::sin(phase);
      }
      values[k * d + j] = amplitude * (profile[j] + kPerturbationScale * perturbation);
    }
  }
  return CurvePopulation(grid, std::move(values), std::move(strata));
}

// ---------------------------------------------------------------------------

CurvePopulation stratify_by_max_level(const CurvePopulation& pop, std::size_t strata,
                                      const CurvePopulation* auxiliary) {
  const std::size_t n_units = pop.size();
  if (strata < 1) throw InvalidArgumentError("number of strata must be >= 1");
  if (strata > n_units) {
    throw InvalidArgumentError("cannot build " + std::to_string(strata) + " strata from " +
                               std::to_string(n_units) + " units");
  }
  const CurvePopulation& source = auxiliary ? *auxiliary : pop;
  if (source.size() != n_units) {
    throw ShapeError("auxiliary data has " + std::to_string(source.size()) + " rows, expected " +
                     std::to_string(n_units));
  }
  std::vector<double> peak(n_units);
  for (std::size_t k = 0; k < n_units; ++k) {
    const auto y = source.row(k);
    peak[k] = *std::max_element(y.begin(), y.end());
  }
  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return peak[a] < peak[b]; });
  std::vector<int> labels(n_units);
  for (std::size_t r = 0; r < n_units; ++r) {
    labels[order[r]] = static_cast<int>(r * strata / n_units) + 1;
  }
  return pop.with_strata(std::move(labels));
}

std::optional<double> estimate_holder_beta(const CurvePopulation& pop) {
  const std::size_t d = pop.grid_size();
  if (d < 3) throw InvalidArgumentError("Hölder exponent needs at least 3 grid points");
  const auto t = pop.grid().points();
  std::vector<double> log_lag, log_msi;
  for (std::size_t lag = 1; lag < d; lag *= 2) {
    CompensatedSum sq, span;
    for (std::size_t j = 0; j + lag < d; ++j) span.add(t[j + lag] - t[j]);
    for (std::size_t k = 0; k < pop.size(); ++k) {
      const auto y = pop.row(k);
      for (std::size_t j = 0; j + lag < d; ++j) {
        const double inc = y[j + lag] - y[j];
        sq.add(inc * inc);
      }
    }
    const auto pairs = static_cast<double>(d - lag);
    const double msi = sq.value() / (pairs * static_cast<double>(pop.size()));
    if (!(msi > 0.0)) return std::nullopt;
    log_lag.push_back(std::log(span.value() / pairs));
    log_msi.push_back(std::log(msi));
  }
  const auto m = static_cast<double>(log_lag.size());
  const double mx = std::accumulate(log_lag.begin(), log_lag.end(), 0.0) / m;
  const double my = std::accumulate(log_msi.begin(), log_msi.end(), 0.0) / m;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < log_lag.size(); ++i) {
    sxy += (log_lag[i] - mx) * (log_msi[i] - my);
    sxx += (log_lag[i] - mx) * (log_lag[i] - mx);
  }
  return 0.5 * sxy / sxx;
}

}  // namespace curvesurvey
