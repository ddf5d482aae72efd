#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace curvesurvey {

enum class DesignKind { srswor, stratified };

// Fixed-size design: SRSWOR over the whole population, or independent SRSWOR
// inside each stratum. Unit indices are 0-based throughout the library.
//
// SRSWOR is represented as a single stratum, so every design has the same
// block structure: Delta_kl is constant on same-stratum pairs and zero across
// strata.
class SamplingDesign {
 public:
  static SamplingDesign srswor(std::size_t population_size, std::size_t sample_size);

  // `labels` holds the stratum of each unit in {1..H}; `allocation[h-1]` = n_h.
  static SamplingDesign stratified(std::vector<int> labels,
                                   std::vector<std::size_t> allocation);

  DesignKind kind() const noexcept { return kind_; }
  std::size_t population_size() const noexcept { return stratum_of_.size(); }
  std::size_t sample_size() const noexcept { return sample_size_; }
  std::size_t stratum_count() const noexcept { return stratum_sizes_.size(); }
  const std::vector<std::size_t>& stratum_sizes() const noexcept { return stratum_sizes_; }
  const std::vector<std::size_t>& allocation() const noexcept { return allocation_; }
  // 0-based stratum of unit k.
  std::size_t stratum_of(std::size_t k) const;
  // Units of stratum h (0-based), ascending.
  std::span<const std::size_t> members(std::size_t h) const { return members_.at(h); }

  // Inclusion probability of a unit in stratum h (0-based).
  double stratum_pi1(std::size_t h) const;
  // pi_kl for two distinct units both in stratum h; zero when n_h < 2.
  double stratum_pi2(std::size_t h) const;

  double pi1(std::size_t k) const;
  double pi2(std::size_t k, std::size_t l) const;
  double delta(std::size_t k, std::size_t l) const;

  // Every stratum has n_h >= 2, so all pi_kl > 0.
  bool variance_estimable() const noexcept;
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::string describe() const;

 private:
  SamplingDesign() = default;
  void index_members();

  DesignKind kind_ = DesignKind::srswor;
  std::vector<std::size_t> stratum_of_;
  std::vector<std::size_t> stratum_sizes_;
  std::vector<std::size_t> allocation_;
  std::vector<std::vector<std::size_t>> members_;
  std::size_t sample_size_ = 0;
  std::vector<std::string> warnings_;
};

struct Sample {
  std::vector<std::size_t> indices;  // sorted
  std::shared_ptr<const SamplingDesign> design;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return indices.size(); }
};

// Partial Fisher-Yates shuffle per stratum under Rng(derive_seed(seed, h)).
Sample draw(const std::shared_ptr<const SamplingDesign>& design, std::uint64_t seed);

struct WeightedSample {
  Sample sample;
  double probability;
};

inline constexpr double kEnumerationLimit = 1e6;

// Number of samples with positive probability, prod_h C(N_h, n_h).
long double sample_space_size(const SamplingDesign& design);

// Every sample with its design probability; throws EnumerationLimitError when
// the sample space exceeds `limit`.
std::vector<WeightedSample> enumerate_all_samples(
    const std::shared_ptr<const SamplingDesign>& design, double limit = kEnumerationLimit);

}  // namespace curvesurvey
