#include <gtest/gtest.h>

#include <cmath>

#include "qport/market.hpp"

using namespace qport;

TEST(Generate, RejectsInvalidSpec) {
  EXPECT_THROW(generate(3, 6, variance::Identical{0.0}, ReturnDistribution::Gaussian, 1), DomainError);
  EXPECT_THROW(generate(0, 6, variance::Identical{1.0}, ReturnDistribution::Gaussian, 1), DomainError);
}

TEST(Generate, RademacherSquaresEqualVariance) {
  const auto X = generate(40, 80, preset("2C'"), ReturnDistribution::Rademacher, 5);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index mu = 0; mu < 80; ++mu)
      EXPECT_NEAR(X.entries()(i, mu) * X.entries()(i, mu), X.variances()[i], 1e-14 * X.variances()[i]);
}

TEST(Generate, UniformCenteredStaysInSupport) {
  const auto X = generate(20, 50, preset("1A"), ReturnDistribution::UniformCentered, 5);
  for (Eigen::Index i = 0; i < 20; ++i)
    EXPECT_LE(X.entries().row(i).cwiseAbs().maxCoeff(), std::sqrt(3.0 * X.variances()[i]));
}

// chi^2 concentration: per-row sample variance of p Gaussian draws has sd sqrt(2/p).
TEST(Generate, GaussianRowVariancesConcentrate) {
  const std::size_t n = 200, p = 400;
  const auto X = generate(n, p, variance::Identical{1.0}, ReturnDistribution::Gaussian, 11);
  const double band = 3.0 * std::sqrt(2.0 / p);
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
    const double v = X.entries().row(i).squaredNorm() / double(p);
    if (std::abs(v - 1.0) <= band) ++inside;
  }
  EXPECT_GE(inside, std::size_t(0.95 * n));
}

TEST(Generate, EntryMomentsMatchForEveryDistribution) {
  for (auto dist : {ReturnDistribution::Gaussian, ReturnDistribution::Rademacher,
                    ReturnDistribution::UniformCentered}) {
    const auto X = generate(4, 50000, variance::Identical{2.0}, dist, 3);
    const double n = double(X.entries().size());
    const double mean = X.entries().mean();
    const double var = X.entries().squaredNorm() / n;
    EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(2.0 / n)) << to_string(dist);
    EXPECT_NEAR(var, 2.0, 0.05) << to_string(dist);
  }
}

TEST(Generate, BitwiseReproducible) {
  const auto a = generate(30, 70, preset("1B"), ReturnDistribution::Gaussian, 2024);
  const auto b = generate(30, 70, preset("1B"), ReturnDistribution::Gaussian, 2024);
  EXPECT_EQ(a.entries(), b.entries());
  EXPECT_EQ(a.variances(), b.variances());
  const auto c = generate(30, 70, preset("1B"), ReturnDistribution::Gaussian, 2025);
  EXPECT_NE(a.entries(), c.entries());
  // Entries are keyed by (seed, i, mu), so a smaller request is a sub-block.
  const auto d = generate(10, 20, preset("1B"), ReturnDistribution::Gaussian, 2024);
  EXPECT_EQ(d.entries(), a.entries().topLeftCorner(10, 20));
}

TEST(Rescale, IdentityAndDoubling) {
  const auto X = generate(5, 11, preset("2A'"), ReturnDistribution::Gaussian, 1);
  EXPECT_EQ(rescale(X, 1.0).entries(), X.entries());
  const auto Y = rescale(X, 4.0);
  EXPECT_EQ(Y.entries(), X.entries() * 2.0);
  EXPECT_TRUE(Y.variances().isApprox(X.variances() * 4.0));
  EXPECT_THROW(rescale(X, 0.0), DomainError);
}

TEST(Rescale, RiskScalesByGamma) {
  const auto X = generate(8, 20, preset("1C"), ReturnDistribution::Gaussian, 9);
  const Portfolio w = Portfolio::equipartition(8);
  for (double gamma : {0.25, 4.0, 9.0})
    EXPECT_NEAR(risk_per_asset(w, rescale(X, gamma)), gamma * risk_per_asset(w, X),
                1e-13 * gamma * risk_per_asset(w, X));
}
