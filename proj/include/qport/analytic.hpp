#pragma once

// Closed-form typical-case results for the minimal risk per asset and the
// concentration of the optimal portfolio, together with the annealed
// ("average the risk first, then optimize") baseline.

#include <cmath>
#include <string>

#include "qport/core.hpp"
#include "qport/io.hpp"
#include "qport/variance_model.hpp"

namespace qport::analytic {

struct Prediction {
  double alpha = 0.0;
  double epsilon_quenched = 0.0;
  double qw_quenched = 0.0;
  double epsilon_annealed = 0.0;
  double qw_annealed = 0.0;
  InverseMoments moments;
};

namespace detail {
inline void require_alpha_above_one(double alpha, const char* who) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw DomainError(std::string(who) + ": scenario ratio alpha = " + io::format_double(alpha) +
                      " must exceed 1 (the optimum is not unique for p <= N)");
}
inline void require_moments(const InverseMoments& m) {
  if (!(m.m1 > 0.0) || !(m.m2 > 0.0)) throw DomainError("inverse moments must be positive");
}
inline void require_beta(double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
}
}  // namespace detail

/// eps = (alpha - 1) / (2 <s^-1>).
inline double quenched_epsilon(double alpha, const InverseMoments& m) {
  detail::require_alpha_above_one(alpha, "quenched_epsilon");
  detail::require_moments(m);
  return (alpha - 1.0) / (2.0 * m.m1);
}

/// q_w = <s^-2> / <s^-1>^2 + 1 / (alpha - 1).
inline double quenched_qw(double alpha, const InverseMoments& m) {
  detail::require_alpha_above_one(alpha, "quenched_qw");
  detail::require_moments(m);
  return m.m2 / (m.m1 * m.m1) + 1.0 / (alpha - 1.0);
}

/// Minimum of the expected risk: alpha / (2 <s^-1>).
inline double annealed_epsilon(double alpha, const InverseMoments& m) {
  if (!(alpha > 0.0)) throw DomainError("annealed_epsilon: alpha must be positive");
  detail::require_moments(m);
  return alpha / (2.0 * m.m1);
}

inline double annealed_qw(const InverseMoments& m) {
  detail::require_moments(m);
  return m.m2 / (m.m1 * m.m1);
}

/// Inverse-variance weights w_i = N s_i^-1 / sum_j s_j^-1. Normalized by the
/// realized sum so the budget holds exactly at finite N.
inline Portfolio annealed_portfolio(const Vector& s) {
  if (s.size() < 1) throw DimensionMismatch("annealed_portfolio: empty variance vector");
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (!(s[i] > 0.0) || !std::isfinite(s[i])) throw DomainError("annealed_portfolio: variances must be positive");
  const Vector inv = s.cwiseInverse();
  return {inv * (static_cast<double>(s.size()) / inv.sum())};
}

inline Prediction predict(double alpha, const InverseMoments& m) {
  return {alpha, quenched_epsilon(alpha, m), quenched_qw(alpha, m), annealed_epsilon(alpha, m), annealed_qw(m), m};
}

inline Prediction predict(double alpha, const VarianceSpec& spec) { return predict(alpha, analytic_moments(spec)); }

/// Returns scaled by sqrt(gamma): risks scale by gamma, concentrations are unchanged.
inline Prediction scaled_prediction(Prediction pred, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("scaled_prediction: gamma must be positive");
  pred.epsilon_quenched *= gamma;
  pred.epsilon_annealed *= gamma;
  return pred;
}

/// Replica-symmetric risk at inverse temperature beta:
/// (alpha-1)/2 * (1/<s^-1> + 1/(beta (alpha-1))) = quenched_epsilon + 1/(2 beta).
inline double finite_beta_epsilon(double alpha, const InverseMoments& m, double beta) {
  detail::require_alpha_above_one(alpha, "finite_beta_epsilon");
  detail::require_moments(m);
  detail::require_beta(beta);
  return 0.5 * (alpha - 1.0) * (1.0 / m.m1 + 1.0 / (beta * (alpha - 1.0)));
}

/// Order parameter chi_w = <s^-1> / (beta (alpha - 1)), the mean posterior
/// variance of a weight.
inline double rs_chi_w(double alpha, const InverseMoments& m, double beta) {
  detail::require_alpha_above_one(alpha, "rs_chi_w");
  detail::require_moments(m);
  detail::require_beta(beta);
  return m.m1 / (beta * (alpha - 1.0));
}

/// Large-N scenario-side susceptibility beta (1 - 1/alpha).
inline double rs_chi_u(double alpha, double beta) {
  detail::require_alpha_above_one(alpha, "rs_chi_u");
  detail::require_beta(beta);
  return beta * (1.0 - 1.0 / alpha);
}

}  // namespace qport::analytic
