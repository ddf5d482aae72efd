#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "curvesurvey/design.hpp"
#include "curvesurvey/errors.hpp"
#include "oracle.hpp"

using namespace curvesurvey;

namespace {

std::shared_ptr<const SamplingDesign> share(SamplingDesign d) {
  return std::make_shared<const SamplingDesign>(std::move(d));
}

std::vector<int> two_strata(std::size_t n1, std::size_t n2) {
  std::vector<int> labels(n1, 1);
  labels.insert(labels.end(), n2, 2);
  return labels;
}

}  // namespace

TEST(Design, Validation) {
  EXPECT_THROW(SamplingDesign::srswor(0, 0), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::srswor(4, 0), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::srswor(4, 5), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::stratified({1, 1, 2}, {1}), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::stratified({1, 1, 2}, {1, 2}), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::stratified({1, 1, 3}, {1, 1, 1}), InvalidArgumentError);
  EXPECT_THROW(SamplingDesign::stratified({1, 1, 2}, {0, 1}), InvalidArgumentError);
  const auto d = SamplingDesign::stratified({1, 1, 2, 2}, {1, 2});
  EXPECT_FALSE(d.variance_estimable());
  EXPECT_FALSE(d.warnings().empty());
  EXPECT_TRUE(SamplingDesign::stratified({1, 1, 2, 2}, {2, 2}).variance_estimable());
}

TEST(Design, FirstOrderInclusion) {
  EXPECT_DOUBLE_EQ(SamplingDesign::srswor(4, 2).pi1(0), 0.5);
  const auto strat = SamplingDesign::stratified(two_strata(100, 100), {10, 30});
  EXPECT_DOUBLE_EQ(strat.pi1(150), 0.3);
  EXPECT_DOUBLE_EQ(strat.pi1(5), 0.1);
  const auto census = SamplingDesign::srswor(7, 7);
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(census.pi1(k), 1.0);
  EXPECT_THROW(census.pi1(7), OutOfRangeError);
}

TEST(Design, SecondOrderInclusion) {
  // Enumeration oracle for SRSWOR(4, 2): each pair appears in one of six samples.
  oracle::Rows r{{{0}, {0}, {0}, {0}}, {1, 1, 1, 1}, {2}};
  std::size_t with_01 = 0;
  const std::size_t total = oracle::for_each_sample(r, [&](std::uint32_t m) { with_01 += (m & 3u) == 3u; });
  const auto d = SamplingDesign::srswor(4, 2);
  EXPECT_DOUBLE_EQ(d.pi2(0, 1), static_cast<double>(with_01) / static_cast<double>(total));
  EXPECT_DOUBLE_EQ(d.pi2(2, 3), 1.0 / 6.0);
  EXPECT_THROW(d.pi2(1, 1), InvalidArgumentError);

  const auto strat = SamplingDesign::stratified(two_strata(100, 100), {10, 30});
  EXPECT_DOUBLE_EQ(strat.pi2(3, 170), 0.1 * 0.3);
  const auto small = SamplingDesign::stratified(two_strata(4, 3), {2, 1});
  EXPECT_DOUBLE_EQ(small.pi2(0, 3), 1.0 / 6.0);
  EXPECT_EQ(small.pi2(4, 5), 0.0);  // n_h = 1
}

TEST(Design, Delta) {
  const auto d = SamplingDesign::srswor(4, 2);
  EXPECT_DOUBLE_EQ(d.delta(1, 1), 0.25);
  EXPECT_NEAR(d.delta(0, 3), -1.0 / 12.0, 1e-15);
  const auto strat = SamplingDesign::stratified(two_strata(5, 6), {2, 3});
  EXPECT_EQ(strat.delta(0, 9), 0.0);
  EXPECT_EQ(SamplingDesign::srswor(5, 5).delta(0, 1), 0.0);
  EXPECT_EQ(SamplingDesign::srswor(5, 5).delta(2, 2), 0.0);
}

TEST(Design, InclusionIdentities) {
  // sum_k pi_k = n and sum_{l != k} pi_kl = (n - 1) pi_k for fixed-size designs.
  for (const auto& d : {SamplingDesign::srswor(9, 4),
                        SamplingDesign::stratified({1, 2, 1, 3, 2, 1, 3, 3, 2, 1}, {2, 1, 3})}) {
    double total = 0;
    for (std::size_t k = 0; k < d.population_size(); ++k) total += d.pi1(k);
    EXPECT_NEAR(total, static_cast<double>(d.sample_size()), 1e-12);
    const double n = static_cast<double>(d.sample_size());
    for (std::size_t k = 0; k < d.population_size(); ++k) {
      double s = 0, row = 0;
      for (std::size_t l = 0; l < d.population_size(); ++l) {
        row += d.delta(k, l);
        if (l != k) s += d.pi2(k, l);
      }
      EXPECT_NEAR(s, (n - 1.0) * d.pi1(k), 1e-12);
      EXPECT_NEAR(row, 0.0, 1e-12);
    }
  }
}

TEST(Draw, CensusTakesEveryUnit) {
  const auto d = share(SamplingDesign::srswor(6, 6));
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    EXPECT_EQ(draw(d, seed).indices, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  }
}

TEST(Draw, InclusionFrequencies) {
  const auto d = share(SamplingDesign::srswor(4, 2));
  std::vector<std::size_t> hits(4, 0);
  const std::size_t draws = 60000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto s = draw(d, i);
    ASSERT_EQ(s.size(), 2u);
    ASSERT_LT(s.indices[0], s.indices[1]);
    for (std::size_t k : s.indices) ++hits[k];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double f = static_cast<double>(hits[k]) / static_cast<double>(draws);
    EXPECT_GE(f, 0.49);
    EXPECT_LE(f, 0.51);
  }
}

TEST(Draw, FullStratumAlwaysIncluded) {
  const auto d = share(SamplingDesign::stratified(two_strata(3, 5), {3, 2}));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = draw(d, seed);
    ASSERT_EQ(s.size(), 5u);
    EXPECT_EQ(s.indices[0], 0u);
    EXPECT_EQ(s.indices[1], 1u);
    EXPECT_EQ(s.indices[2], 2u);
    EXPECT_GE(s.indices[3], 3u);
  }
}

TEST(Draw, SeedDeterminism) {
  const auto d = share(SamplingDesign::stratified(two_strata(50, 70), {7, 9}));
  EXPECT_EQ(draw(d, 123).indices, draw(d, 123).indices);
  EXPECT_NE(draw(d, 123).indices, draw(d, 124).indices);
  EXPECT_EQ(draw(d, 123).seed, 123u);
}

TEST(Enumerate, SrsworAndStratified) {
  const auto all = enumerate_all_samples(share(SamplingDesign::srswor(4, 2)));
  ASSERT_EQ(all.size(), 6u);
  for (const auto& w : all) EXPECT_DOUBLE_EQ(w.probability, 1.0 / 6.0);

  const auto strat = enumerate_all_samples(share(SamplingDesign::stratified({1, 1, 2, 2}, {1, 1})));
  ASSERT_EQ(strat.size(), 4u);
  for (const auto& w : strat) EXPECT_DOUBLE_EQ(w.probability, 0.25);
}

TEST(Enumerate, ProbabilitiesMatchInclusion) {
  const auto d = share(SamplingDesign::stratified({2, 1, 1, 2, 1, 2, 2}, {2, 3}));
  const auto all = enumerate_all_samples(d);
  EXPECT_EQ(static_cast<double>(all.size()), static_cast<double>(sample_space_size(*d)));
  double total = 0;
  std::vector<double> incl(d->population_size(), 0.0);
  std::vector<std::vector<double>> pair(d->population_size(), std::vector<double>(d->population_size(), 0.0));
  for (const auto& w : all) {
    total += w.probability;
    for (std::size_t k : w.sample.indices) {
      incl[k] += w.probability;
      for (std::size_t l : w.sample.indices) pair[k][l] += w.probability;
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  for (std::size_t k = 0; k < incl.size(); ++k) {
    EXPECT_NEAR(incl[k], d->pi1(k), 1e-14);
    for (std::size_t l = 0; l < incl.size(); ++l) {
      if (l != k) EXPECT_NEAR(pair[k][l], d->pi2(k, l), 1e-14);
    }
  }
}

TEST(Enumerate, RefusesLargeSpaces) {
  const auto d = share(SamplingDesign::srswor(60, 30));
  try {
    enumerate_all_samples(d);
    FAIL() << "expected EnumerationLimitError";
  } catch (const EnumerationLimitError& e) {
    EXPECT_GT(e.count(), kEnumerationLimit);
  }
  EXPECT_THROW(enumerate_all_samples(share(SamplingDesign::srswor(10, 5)), 100), EnumerationLimitError);
}
