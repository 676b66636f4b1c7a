#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qport/variance_model.hpp"

using namespace qport;

TEST(AnalyticMoments, CaseOnePresets) {
  const auto a = analytic_moments(preset("1A"));
  EXPECT_NEAR(a.m1, 3.0, 1e-12);
  EXPECT_NEAR(a.m2, 30.0, 1e-12);
  const auto b = analytic_moments(preset("1B"));
  EXPECT_NEAR(b.m1, 4.0, 1e-12);
  EXPECT_NEAR(b.m2, 30.0, 1e-12);
  const auto c = analytic_moments(preset("1C"));
  EXPECT_NEAR(c.m1, 5.0, 1e-12);
  EXPECT_NEAR(c.m2, 30.0, 1e-12);
}

TEST(AnalyticMoments, IdenticalAndUniform) {
  const auto id = analytic_moments(variance::Identical{1.0});
  EXPECT_EQ(id.m1, 1.0);
  EXPECT_EQ(id.m2, 1.0);
  const auto u = analytic_moments(variance::Uniform{1.0, 2.0});
  EXPECT_NEAR(u.m1, std::numbers::ln2, 1e-15);
  EXPECT_NEAR(u.m2, 0.5, 1e-15);
}

// Midpoint-rule quadrature of E[s^-t] for s ~ U[l, u], independent of the closed forms.
TEST(AnalyticMoments, UniformMatchesQuadrature) {
  for (const auto& name : {"2A'", "2B'", "2C'"}) {
    const auto& u = std::get<variance::Uniform>(preset(name));
    const int n = 200000;
    const double h = (u.upper - u.lower) / n;
    double q1 = 0.0, q2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double s = u.lower + (k + 0.5) * h;
      q1 += h / s;
      q2 += h / (s * s);
    }
    q1 /= (u.upper - u.lower);
    q2 /= (u.upper - u.lower);
    const auto m = analytic_moments(preset(name));
    EXPECT_NEAR(m.m1, q1, 1e-9) << name;
    EXPECT_NEAR(m.m2, q2, 1e-9) << name;
  }
}

TEST(AnalyticMoments, JensenBound) {
  for (const auto& [name, spec] : presets()) {
    const auto m = analytic_moments(spec);
    EXPECT_GT(m.m2, m.m1 * m.m1) << name;
  }
  const auto id = analytic_moments(variance::Identical{2.5});
  EXPECT_DOUBLE_EQ(id.m2, id.m1 * id.m1);
}

TEST(AnalyticMoments, InvalidParametersThrow) {
  EXPECT_THROW(analytic_moments(variance::Identical{0.0}), DomainError);
  EXPECT_THROW(analytic_moments(variance::TwoPoint{1.5, 1.0}), DomainError);
  EXPECT_THROW(analytic_moments(variance::TwoPoint{0.5, -1.0}), DomainError);
  EXPECT_THROW(analytic_moments(variance::Uniform{2.0, 1.0}), DomainError);
  EXPECT_THROW(analytic_moments(variance::Uniform{0.0, 1.0}), DomainError);
  EXPECT_THROW(analytic_moments(variance::Explicit{{1.0, -2.0}}), DomainError);
}

TEST(SampleVariances, DegenerateDistributions) {
  EXPECT_EQ(sample_variances(variance::Identical{1.0}, 5, 42), Vector::Ones(5));
  EXPECT_EQ(sample_variances(variance::TwoPoint{1.0, 9.0}, 3, 42), Vector::Ones(3));
}

TEST(SampleVariances, ExplicitVerbatimAndLengthChecked) {
  const variance::Explicit e{{0.5, 2.0, 3.0}};
  const Vector s = sample_variances(e, 3, 0);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[2], 3.0);
  EXPECT_THROW(sample_variances(e, 4, 0), DimensionMismatch);
}

TEST(SampleVariances, DeterministicPerSeedAndIndex) {
  const auto& spec = preset("2B'");
  const Vector a = sample_variances(spec, 100, 7);
  EXPECT_EQ(a, sample_variances(spec, 100, 7));
  EXPECT_NE(a, sample_variances(spec, 100, 8));
  // prefix property: asset i depends only on (seed, i)
  EXPECT_EQ(sample_variances(spec, 10, 7), a.head(10));
}

TEST(SampleVariances, TwoPointLawOfLargeNumbers) {
  const std::size_t n = 100000;
  const Vector s = sample_variances(variance::TwoPoint{0.5, 2.0}, n, 123);
  const Vector inv = s.cwiseInverse();
  const double mean = inv.mean();
  const double sd = std::sqrt((inv.array() - mean).square().sum() / (n - 1.0));
  EXPECT_LE(std::abs(mean - 0.75), 3.0 * sd / std::sqrt(double(n)));
}

// Empirical inverse moments of large samples agree with the closed forms.
TEST(SampleVariances, EmpiricalMomentsConvergeForEveryPreset) {
  const std::size_t n = 100000;
  for (const auto& [name, spec] : presets()) {
    const Vector s = sample_variances(spec, n, 99);
    const auto m = analytic_moments(spec);
    const Vector inv = s.cwiseInverse();
    const Vector inv2 = inv.cwiseAbs2();
    auto check = [&](const Vector& v, double target) {
      const double mean = v.mean();
      const double sd = std::sqrt((v.array() - mean).square().sum() / (n - 1.0));
      EXPECT_LE(std::abs(mean - target), 3.0 * sd / std::sqrt(double(n))) << name;
    };
    check(inv, m.m1);
    check(inv2, m.m2);
    const auto e = analytic_moments(variance::Explicit{{s.data(), s.data() + s.size()}});
    EXPECT_NEAR(e.m1, inv.mean(), 1e-12 * e.m1);
  }
}

TEST(VarianceSpecText, ParsesEveryKind) {
  const auto tp = std::get<variance::TwoPoint>(parse_variance_spec("two-point:r=0.84,s=0.0741"));
  EXPECT_EQ(tp.r, 0.84);
  EXPECT_EQ(tp.s_tilde, 0.0741);
  EXPECT_EQ(std::get<variance::Identical>(parse_variance_spec("identical:s=1")).s, 1.0);
  const auto u = std::get<variance::Uniform>(parse_variance_spec("uniform:l=1,u=3"));
  EXPECT_EQ(u.upper, 3.0);
  const auto e = std::get<variance::Explicit>(parse_variance_spec("explicit:values=1;2.5;4"));
  EXPECT_EQ(e.values, (std::vector<double>{1.0, 2.5, 4.0}));
}

TEST(VarianceSpecText, RejectsMalformed) {
  EXPECT_THROW(parse_variance_spec("gamma:k=2"), ParseError);
  EXPECT_THROW(parse_variance_spec("two-point:r=0.5"), ParseError);
  EXPECT_THROW(parse_variance_spec("uniform:l=1,u=2,z=3"), ParseError);
  EXPECT_THROW(parse_variance_spec("identical:s=abc"), ParseError);
  EXPECT_THROW(parse_variance_spec("identical:s=0"), DomainError);
}

TEST(VarianceSpecText, FormatParseRoundTripForPresets) {
  for (const auto& [name, spec] : presets()) {
    const auto text = format_variance_spec(spec);
    EXPECT_EQ(format_variance_spec(parse_variance_spec(text)), text) << name;
    const auto a = analytic_moments(spec), b = analytic_moments(parse_variance_spec(text));
    EXPECT_EQ(a.m1, b.m1);
    EXPECT_EQ(a.m2, b.m2);
  }
}

TEST(Presets, AcceptUnprimedCaseTwoNames) {
  EXPECT_EQ(canonical_preset("2A"), "2A'");
  EXPECT_EQ(canonical_preset("2C'"), "2C'");
  EXPECT_THROW(canonical_preset("3A"), ParseError);
}
