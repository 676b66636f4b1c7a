#pragma once

// Gaussian belief propagation for the minimum-variance portfolio.
//
// Messages on the asset side (means m_w, variances chi_w) and on the
// scenario side (m_u, chi_u) are iterated with full parallel sweeps:
//
//   chi~_u = (1/N) sum_i x^2 chi_w          chi_u = beta / (1 + beta chi~_u)
//   h_u    = N^{-1/2} X^T m_w - chi~_u m_u   m_u   = -chi_u h_u
//   chi~_w = (1/N) sum_mu x^2 chi_u          chi_w = 1 / chi~_w
//   h_w    = N^{-1/2} X m_u + chi~_w m_w     m_w   = chi_w (h_w + k)
//
// The budget multiplier k follows k <- k + beta k_step (N - sum m_w).
// The budget responds to k with gain about beta k_step sum chi_w, so the
// default step is min(1/N, 1/(beta sum chi_w)), re-evaluated every sweep.
// At any fixed point k e = beta J m_w, so m_w is the exact optimum
// independently of beta; beta only sets the scale of the susceptibilities.
//
// Zero temperature uses the beta-free system obtained by the substitution
// chi_u -> beta chi_u', chi_w -> chi_w' / beta, m_u -> beta m_u',
// k -> beta k', which is the beta = 1 system above. Reported
// susceptibilities are then the rescaled ones: beta chi_w and chi_u / beta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "qport/core.hpp"
#include "qport/io.hpp"

namespace qport {

struct BPParams {
  /// Inverse temperature; nullopt selects the zero-temperature limit.
  std::optional<double> beta;
  double damping = 0.5;
  double delta = 1e-6;
  std::size_t max_iters = 100'000;
  std::optional<double> k_step;  ///< default min(1/N, 1/(beta sum chi_w))
};

inline SolveReport belief_propagation(const ReturnMatrix& X, const BPParams& params = {}) {
  if (!X.well_posed())
    throw DomainError("belief_propagation: requires p > N (got p = " + std::to_string(X.n_scenarios()) +
                      ", N = " + std::to_string(X.n_assets()) + ")");
  const double n = static_cast<double>(X.n_assets());
  const double b = params.beta.value_or(1.0);
  double k_step = params.k_step.value_or(1.0 / n);
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("belief_propagation: beta must be positive and finite");
  if (!(params.damping >= 0.0 && params.damping < 1.0)) throw DomainError("belief_propagation: damping must be in [0,1)");
  if (!(params.delta > 0.0) || !(k_step > 0.0) || params.max_iters < 1)
    throw DomainError("belief_propagation: delta, k_step and max_iters must be positive");

  const Matrix& x = X.entries();
  const Matrix x2 = x.cwiseAbs2();
  const double inv_sqrt_n = 1.0 / std::sqrt(n);
  const double d = params.damping;
  const auto na = x.rows();
  const auto ns = x.cols();

  Vector m_w = Vector::Ones(na);
  Vector chi_w = Vector::Constant(na, 1.0 / b);
  Vector m_u = Vector::Zero(ns);
  Vector chi_u = Vector::Constant(ns, b);
  double k = 0.0;

  Vector ct_u(ns), ct_w(na), h(ns), hw(na);
  Vector next_u(ns), next_chi_u(ns), next_w(na), next_chi_w(na);

  SolveReport report;
  report.solver_id = SolverId::BeliefPropagation;
  for (std::size_t t = 0; t < params.max_iters; ++t) {
    // scenario side
    ct_u.noalias() = x2.transpose() * chi_w;
    ct_u /= n;
    next_chi_u = (b / (1.0 + b * ct_u.array())).matrix();
    h.noalias() = x.transpose() * m_w;
    h = h * inv_sqrt_n - ct_u.cwiseProduct(m_u);
    next_u = -next_chi_u.cwiseProduct(h);
    next_chi_u = d * chi_u + (1.0 - d) * next_chi_u;
    next_u = d * m_u + (1.0 - d) * next_u;

    // asset side
    ct_w.noalias() = x2 * next_chi_u;
    ct_w /= n;
    if (!(ct_w.minCoeff() > 0.0))
      throw NumericalBreakdown("belief_propagation: non-positive cavity precision at sweep " + std::to_string(t));
    next_chi_w = ct_w.cwiseInverse();
    hw.noalias() = x * next_u;
    hw = hw * inv_sqrt_n + ct_w.cwiseProduct(m_w);
    next_w = next_chi_w.cwiseProduct((hw.array() + k).matrix());
    next_chi_w = d * chi_w + (1.0 - d) * next_chi_w;
    next_w = d * m_w + (1.0 - d) * next_w;

    if (!params.k_step) k_step = std::min(1.0 / n, 1.0 / (b * next_chi_w.sum()));
    const double next_k = k + b * k_step * (n - next_w.sum());
    const double step =
        (next_w - m_w).lpNorm<1>() + (next_u - m_u).lpNorm<1>() / b + std::abs(next_k - k) / b;

    m_w.swap(next_w);
    m_u.swap(next_u);
    chi_w.swap(next_chi_w);
    chi_u.swap(next_chi_u);
    k = next_k;
    report.iterations = t + 1;
    report.residual = step;
    if (!std::isfinite(step)) throw NumericalBreakdown("belief_propagation: messages became non-finite");
    if (step <= params.delta) {
      report.converged = true;
      break;
    }
  }

  report.portfolio = Portfolio{std::move(m_w)};
  report.mean_chi_w = chi_w.mean();
  report.mean_chi_u = chi_u.mean();
  report.multiplier = k;
  report.epsilon = risk_per_asset(report.portfolio, X);
  report.q_w = concentration(report.portfolio);
  return report;
}

}  // namespace qport
