#include <gtest/gtest.h>

#include <cmath>

#include "curvesurvey/bands.hpp"
#include "curvesurvey/errors.hpp"

using namespace curvesurvey;

namespace {

FunctionalEstimate fake_estimate(std::vector<double> mean, std::vector<double> var) {
  std::vector<double> pts(mean.size());
  for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = static_cast<double>(j);
  return FunctionalEstimate{TimeGrid(pts), std::move(mean), std::move(var), std::nullopt, {}, 0};
}

ConfidenceBand band_of(std::vector<double> center, std::vector<double> half) {
  std::vector<double> pts(center.size());
  for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = static_cast<double>(j);
  return ConfidenceBand{TimeGrid(pts), std::move(center), std::move(half), 0.05, BandKind::global, 0};
}

}  // namespace

TEST(Scales, PublishedConstants) {
  EXPECT_NEAR(global_scale(0.05), 2.716, 5e-4);
  EXPECT_NEAR(global_scale(0.01), 3.255, 5e-4);
  EXPECT_NEAR(pointwise_scale(0.05), 1.960, 1e-3);
  EXPECT_NEAR(pointwise_scale(0.01), 2.576, 1e-3);
  EXPECT_DOUBLE_EQ(band_scale(0.05, BandKind::global), global_scale(0.05));
  EXPECT_DOUBLE_EQ(band_scale(0.05, BandKind::pointwise), pointwise_scale(0.05));
}

TEST(Scales, DomainErrors) {
  for (double a : std::vector<double>{0.0, 1.0, 2.0, -0.1, NAN}) {
    EXPECT_THROW(global_scale(a), OutOfRangeError);
    EXPECT_THROW(pointwise_scale(a), OutOfRangeError);
  }
  EXPECT_THROW(normal_quantile(0.0), OutOfRangeError);
  EXPECT_THROW(normal_quantile(1.0), OutOfRangeError);
}

TEST(Scales, MonotoneInAlpha) {
  double prev_g = INFINITY, prev_p = INFINITY;
  for (double a = 0.0005; a < 1.0; a += 0.0005) {
    const double g = global_scale(a), p = pointwise_scale(a);
    EXPECT_LT(g, prev_g);
    EXPECT_LT(p, prev_p);
    prev_g = g;
    prev_p = p;
  }
  EXPECT_GT(pointwise_scale(0.9999), 0.0);
  EXPECT_LT(pointwise_scale(0.9999), 2e-4);
}

TEST(NormalQuantile, InvertsErfc) {
  for (double p : {1e-300, 1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999, 1 - 1e-9}) {
    const double x = normal_quantile(p);
    const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
    EXPECT_NEAR(back, p, 1e-12 * std::min(p, 1 - p) + 4e-16) << p;
  }
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489, 1e-12);
}

TEST(BuildBand, HalfWidths) {
  const auto b = build_band(fake_estimate({1, 2}, {4, 1}), 0.05, BandKind::global);
  EXPECT_NEAR(b.half_width[0], 5.432, 1e-3);
  EXPECT_NEAR(b.half_width[1], 2.716, 5e-4);
  EXPECT_DOUBLE_EQ(b.lower(1), 2 - b.half_width[1]);
  EXPECT_DOUBLE_EQ(b.upper(0), 1 + b.half_width[0]);
  EXPECT_EQ(b.kind, BandKind::global);
  EXPECT_EQ(b.alpha, 0.05);

  const auto zero = build_band(fake_estimate({1, 2, 3}, {0, 0, 0}), 0.01, BandKind::global);
  for (double w : zero.half_width) EXPECT_EQ(w, 0.0);
}

TEST(BuildBand, GlobalOverPointwiseRatio) {
  const auto est = fake_estimate({0, 1, 2, 3}, {0.5, 2.0, 7.0, 0.01});
  const auto g = build_band(est, 0.05, BandKind::global);
  const auto p = build_band(est, 0.05, BandKind::pointwise);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(g.half_width[j] / p.half_width[j], global_scale(0.05) / pointwise_scale(0.05), 1e-14);
    EXPECT_NEAR(g.half_width[j] / p.half_width[j], 2.716 / 1.960, 1e-3);
  }
}

TEST(BuildBand, ScalesLinearlyWithCurves) {
  // Multiplying the curves by a multiplies mean by a and variance by a^2.
  const auto est = fake_estimate({1, -2, 3}, {0.3, 1.2, 2.0});
  const auto scaled = fake_estimate({-4, 8, -12}, {4.8, 19.2, 32.0});
  const auto a = build_band(est, 0.05, BandKind::global);
  const auto b = build_band(scaled, 0.05, BandKind::global);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(b.half_width[j], 4.0 * a.half_width[j], 1e-13);
}

TEST(BuildBand, NegativeVarianceClamped) {
  const auto b = build_band(fake_estimate({1, 2, 3}, {-0.5, 1, -1e-9}), 0.05, BandKind::pointwise);
  EXPECT_EQ(b.clamped_count, 2u);
  EXPECT_EQ(b.half_width[0], 0.0);
  EXPECT_EQ(b.half_width[2], 0.0);
}

TEST(BuildBand, Preconditions) {
  EXPECT_THROW(build_band(fake_estimate({1, 2}, {}), 0.05, BandKind::global), InvalidArgumentError);
  EXPECT_THROW(build_band(fake_estimate({1, 2}, {1, 1}), 1.5, BandKind::global), OutOfRangeError);
}

TEST(Covers, Rules) {
  const auto b = band_of({1, 2, 3}, {0.5, 0.5, 0.5});
  EXPECT_TRUE(covers(b, std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(covers(b, std::vector<double>{1.4, 1.6, 3.49}));
  EXPECT_FALSE(covers(b, std::vector<double>{1, 2.6, 3}));
  EXPECT_FALSE(covers(b, std::vector<double>{1.5, 2, 3}));  // on the boundary: strict
  EXPECT_DOUBLE_EQ(pointwise_coverage_fraction(b, std::vector<double>{1, 2.6, 3}), 2.0 / 3.0);

  // Zero width: covered only when the error is exactly zero.
  const auto z = band_of({1, 2}, {0, 0});
  EXPECT_TRUE(covers(z, std::vector<double>{1, 2}));
  EXPECT_FALSE(covers(z, std::vector<double>{1, 2 + 1e-15}));
  EXPECT_THROW(covers(z, std::vector<double>{1}), ShapeError);
}
