#pragma once

// Random return matrices with independent zero-mean entries whose
// variance depends only on the asset: E[x_{i mu}^2] = s_i.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "qport/core.hpp"
#include "qport/rng.hpp"
#include "qport/variance_model.hpp"

namespace qport {

enum class ReturnDistribution {
  Gaussian,
  Rademacher,       ///< x = +-sqrt(s) with equal probability
  UniformCentered,  ///< uniform on [-sqrt(3 s), +sqrt(3 s)]
};

inline std::string_view to_string(ReturnDistribution d) noexcept {
  switch (d) {
    case ReturnDistribution::Gaussian: return "gaussian";
    case ReturnDistribution::Rademacher: return "rademacher";
    case ReturnDistribution::UniformCentered: return "uniform";
  }
  return "?";
}

inline ReturnDistribution parse_distribution(std::string_view s) {
  if (s == "gaussian") return ReturnDistribution::Gaussian;
  if (s == "rademacher") return ReturnDistribution::Rademacher;
  if (s == "uniform") return ReturnDistribution::UniformCentered;
  throw ParseError("unknown return distribution '" + std::string(s) +
                   "' (expected gaussian|rademacher|uniform)");
}

/// Unit-variance draw for entry (i, mu) of the matrix keyed by `seed`.
inline double unit_draw(ReturnDistribution dist, std::uint64_t seed, std::uint64_t asset,
                        std::uint64_t scenario) {
  const rng::Stream stream(rng::derive_key({seed, static_cast<std::uint64_t>(rng::Domain::Returns), asset}));
  switch (dist) {
    case ReturnDistribution::Gaussian: return stream.normal(scenario);
    case ReturnDistribution::Rademacher: return stream.sign(scenario);
    case ReturnDistribution::UniformCentered:
      return std::sqrt(3.0) * (2.0 * stream.uniform(scenario) - 1.0);
  }
  return 0.0;
}

/// Draws s from `spec` and then every entry independently; bitwise
/// reproducible for a fixed argument tuple.
inline ReturnMatrix generate(std::size_t n_assets, std::size_t n_scenarios, const VarianceSpec& spec,
                             ReturnDistribution dist, std::uint64_t seed) {
  if (n_assets < 1 || n_scenarios < 1) throw DomainError("generate: need n_assets >= 1 and n_scenarios >= 1");
  Vector s = sample_variances(spec, n_assets, seed);
  Matrix x(static_cast<Eigen::Index>(n_assets), static_cast<Eigen::Index>(n_scenarios));
  for (std::size_t i = 0; i < n_assets; ++i) {
    const double scale = std::sqrt(s[static_cast<Eigen::Index>(i)]);
    for (std::size_t mu = 0; mu < n_scenarios; ++mu)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(mu)) = scale * unit_draw(dist, seed, i, mu);
  }
  return ReturnMatrix(std::move(x), std::move(s));
}

/// x -> sqrt(gamma) x, s -> gamma s.
inline ReturnMatrix rescale(const ReturnMatrix& X, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("rescale: gamma must be positive");
  if (gamma == 1.0) return X;
  return ReturnMatrix(X.entries() * std::sqrt(gamma), X.variances() * gamma);
}

}  // namespace qport
