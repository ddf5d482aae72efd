#include "curvesurvey/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "curvesurvey/errors.hpp"
#include "curvesurvey/rng.hpp"

namespace curvesurvey {

SamplingDesign SamplingDesign::srswor(std::size_t population_size, std::size_t sample_size) {
  if (population_size < 1) throw InvalidArgumentError("SRSWOR needs N >= 1");
  if (sample_size < 1 || sample_size > population_size) {
    throw InvalidArgumentError("SRSWOR needs 1 <= n <= N, got n = " +
                               std::to_string(sample_size) + ", N = " +
                               std::to_string(population_size));
  }
  SamplingDesign d;
  d.kind_ = DesignKind::srswor;
  d.stratum_of_.assign(population_size, 0);
  d.stratum_sizes_ = {population_size};
  d.allocation_ = {sample_size};
  d.sample_size_ = sample_size;
  d.index_members();
  if (sample_size == 1 && population_size > 1) {
    d.warnings_.push_back("n = 1: second-order inclusion probabilities vanish, "
                          "variance is not estimable");
  }
  return d;
}

SamplingDesign SamplingDesign::stratified(std::vector<int> labels,
                                          std::vector<std::size_t> allocation) {
  if (labels.empty()) throw InvalidArgumentError("stratified design needs a nonempty population");
  if (allocation.empty()) throw InvalidArgumentError("stratified design needs an allocation");
  const std::size_t n_strata = allocation.size();
  SamplingDesign d;
  d.kind_ = DesignKind::stratified;
  d.stratum_of_.resize(labels.size());
  d.stratum_sizes_.assign(n_strata, 0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 1 || static_cast<std::size_t>(labels[k]) > n_strata) {
      throw InvalidArgumentError("unit " + std::to_string(k) + " has stratum label " +
                                 std::to_string(labels[k]) + ", allocation covers 1.." +
                                 std::to_string(n_strata));
    }
    d.stratum_of_[k] = static_cast<std::size_t>(labels[k] - 1);
    ++d.stratum_sizes_[d.stratum_of_[k]];
  }
  for (std::size_t h = 0; h < n_strata; ++h) {
    if (allocation[h] < 1 || allocation[h] > d.stratum_sizes_[h]) {
      throw InvalidArgumentError("stratum " + std::to_string(h + 1) + ": need 1 <= n_h <= N_h, got n_h = " +
                                 std::to_string(allocation[h]) + ", N_h = " +
                                 std::to_string(d.stratum_sizes_[h]));
    }
    if (allocation[h] == 1) {
      d.warnings_.push_back("stratum " + std::to_string(h + 1) +
                            " has n_h = 1: variance is not estimable");
    }
  }
  d.allocation_ = std::move(allocation);
  d.sample_size_ = std::accumulate(d.allocation_.begin(), d.allocation_.end(), std::size_t{0});
  d.index_members();
  return d;
}

void SamplingDesign::index_members() {
  members_.assign(stratum_sizes_.size(), {});
  for (std::size_t h = 0; h < stratum_sizes_.size(); ++h) members_[h].reserve(stratum_sizes_[h]);
  for (std::size_t k = 0; k < stratum_of_.size(); ++k) members_[stratum_of_[k]].push_back(k);
}

std::size_t SamplingDesign::stratum_of(std::size_t k) const {
  if (k >= stratum_of_.size()) {
    throw OutOfRangeError("unit index " + std::to_string(k) + " outside population of size " +
                          std::to_string(stratum_of_.size()));
  }
  return stratum_of_[k];
}

double SamplingDesign::stratum_pi1(std::size_t h) const {
  return static_cast<double>(allocation_.at(h)) / static_cast<double>(stratum_sizes_.at(h));
}

double SamplingDesign::stratum_pi2(std::size_t h) const {
  const auto n = static_cast<double>(allocation_.at(h));
  const auto big_n = static_cast<double>(stratum_sizes_.at(h));
  if (big_n < 2) return 0.0;
  return n * (n - 1) / (big_n * (big_n - 1));
}

double SamplingDesign::pi1(std::size_t k) const { return stratum_pi1(stratum_of(k)); }

double SamplingDesign::pi2(std::size_t k, std::size_t l) const {
  if (k == l) throw InvalidArgumentError("pi2 needs distinct units; use pi1 for k == l");
  const std::size_t hk = stratum_of(k);
  const std::size_t hl = stratum_of(l);
  if (hk == hl) return stratum_pi2(hk);
  return stratum_pi1(hk) * stratum_pi1(hl);
}

double SamplingDesign::delta(std::size_t k, std::size_t l) const {
  if (k == l) {
    const double p = pi1(k);
    return p * (1.0 - p);
  }
  const std::size_t hk = stratum_of(k);
  const std::size_t hl = stratum_of(l);
  if (hk != hl) return 0.0;
  const double p = stratum_pi1(hk);
  return stratum_pi2(hk) - p * p;
}

bool SamplingDesign::variance_estimable() const noexcept {
  return std::all_of(allocation_.begin(), allocation_.end(),
                     [](std::size_t n) { return n >= 2; });
}

std::string SamplingDesign::describe() const {
  if (kind_ == DesignKind::srswor) {
    return "srswor(N=" + std::to_string(population_size()) + ", n=" +
           std::to_string(sample_size_) + ")";
  }
  std::string s = "stratified(";
  for (std::size_t h = 0; h < allocation_.size(); ++h) {
    if (h) s += "; ";
    s += "N_" + std::to_string(h + 1) + "=" + std::to_string(stratum_sizes_[h]) + ",n_" +
         std::to_string(h + 1) + "=" + std::to_string(allocation_[h]);
  }
  return s + ")";
}

Sample draw(const std::shared_ptr<const SamplingDesign>& design, std::uint64_t seed) {
  if (!design) throw InvalidArgumentError("draw needs a design");
  Sample sample{{}, design, seed};
  sample.indices.reserve(design->sample_size());
  std::vector<std::size_t> pool;
  for (std::size_t h = 0; h < design->stratum_count(); ++h) {
    const auto members = design->members(h);
    const std::size_t n_h = design->allocation()[h];
    if (n_h == members.size()) {
      sample.indices.insert(sample.indices.end(), members.begin(), members.end());
      continue;
    }
    Rng rng(derive_seed(seed, h));
    pool.assign(members.begin(), members.end());
    for (std::size_t i = 0; i < n_h; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    sample.indices.insert(sample.indices.end(), pool.begin(),
                          pool.begin() + static_cast<std::ptrdiff_t>(n_h));
  }
  std::sort(sample.indices.begin(), sample.indices.end());
  return sample;
}

namespace {

long double binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  long double c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  }
  return std::round(c);
}

// All k-subsets of `items` in lexicographic order of positions.
std::vector<std::vector<std::size_t>> combinations(std::span<const std::size_t> items,
                                                   std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), 0);
  const std::size_t n = items.size();
  while (true) {
    std::vector<std::size_t> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = items[pos[i]];
    out.push_back(std::move(subset));
    std::size_t i = k;
    while (i > 0 && pos[i - 1] == n - k + i - 1) --i;
    if (i == 0) return out;
    ++pos[i - 1];
    for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
  }
}

}  // namespace

long double sample_space_size(const SamplingDesign& design) {
  long double count = 1;
  for (std::size_t h = 0; h < design.stratum_count(); ++h) {
    count *= binomial(design.stratum_sizes()[h], design.allocation()[h]);
  }
  return count;
}

std::vector<WeightedSample> enumerate_all_samples(
    const std::shared_ptr<const SamplingDesign>& design, double limit) {
  if (!design) throw InvalidArgumentError("enumeration needs a design");
  const long double count = sample_space_size(*design);
  if (count > static_cast<long double>(limit)) throw EnumerationLimitError(count, limit);

  std::vector<std::vector<std::vector<std::size_t>>> per_stratum;
  double probability = 1.0;
  for (std::size_t h = 0; h < design->stratum_count(); ++h) {
    per_stratum.push_back(combinations(design->members(h), design->allocation()[h]));
    probability /= static_cast<double>(per_stratum.back().size());
  }

  std::vector<WeightedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> choice(per_stratum.size(), 0);
  while (true) {
    Sample s{{}, design, 0};
    for (std::size_t h = 0; h < per_stratum.size(); ++h) {
      const auto& part = per_stratum[h][choice[h]];
      s.indices.insert(s.indices.end(), part.begin(), part.end());
    }
    std::sort(s.indices.begin(), s.indices.end());
    out.push_back({std::move(s), probability});
    std::size_t h = per_stratum.size();
    while (h > 0) {
      if (++choice[h - 1] < per_stratum[h - 1].size()) break;
      choice[h - 1] = 0;
      --h;
    }
    if (h == 0) return out;
  }
}

}  // namespace curvesurvey
