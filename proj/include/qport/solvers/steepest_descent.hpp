#pragma once

// Primal-dual steepest descent on the Lagrangian
//   L(w, zeta) = H(w|X) + zeta (N - e^T w),
// descending in w and ascending in zeta:
//   w    <- w - eta_w (J w - zeta e)
//   zeta <- zeta + eta_zeta (N - e^T w)
// from w = e, zeta = 1, until the L1 step |dzeta| + |dw|_1 <= delta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "qport/core.hpp"
#include "qport/io.hpp"

namespace qport {

enum class StepPolicy {
  /// Steps exactly as given.
  Fixed,
  /// eta_w capped at 1 / lambda_max(J) and eta_zeta at lambda_min(J) / N
  /// (so that eta_zeta e^T J^-1 e <= 1); both steps halved and the run
  /// restarted from scratch whenever the iterate diverges.
  Auto,
};

struct SteepestDescentParams {
  std::optional<double> eta_w;     ///< default 100 / N
  std::optional<double> eta_zeta;  ///< default 1 / N
  double delta = 1e-6;
  std::size_t max_iters = 1'000'000;
  double divergence_cap = 1e12;
  StepPolicy policy = StepPolicy::Auto;
  int max_restarts = 12;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double largest_eigenvalue(const Matrix& J, int max_iters = 2000, double tol = 1e-8) {
  Vector v(J.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector u = J * v;
    const double next = v.dot(u);
    const double norm = u.norm();
    if (norm == 0.0) return 0.0;
    v = u / norm;
    if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

/// Smallest eigenvalue of a symmetric PSD matrix, from the largest one of
/// lambda_max I - J. Loses accuracy when lambda_min << lambda_max.
inline double smallest_eigenvalue(const Matrix& J, double lambda_max) {
  Matrix shifted = -J;
  shifted.diagonal().array() += lambda_max;
  return lambda_max - largest_eigenvalue(shifted);
}

namespace detail {

struct DescentOutcome {
  Vector w;
  double zeta = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool diverged = false;
};

inline DescentOutcome run_descent(const Matrix& J, double eta_w, double eta_zeta, const SteepestDescentParams& p) {
  const auto n = J.rows();
  const double budget = static_cast<double>(n);
  DescentOutcome out;
  out.w = Vector::Ones(n);
  out.zeta = 1.0;
  Vector next(n);
  for (std::size_t t = 0; t < p.max_iters; ++t) {
    next.noalias() = J * out.w;
    next = out.w - eta_w * (next.array() - out.zeta).matrix();
    const double zeta_next = out.zeta + eta_zeta * (budget - out.w.sum());
    const double step = std::abs(zeta_next - out.zeta) + (next - out.w).lpNorm<1>();
    out.w.swap(next);
    out.zeta = zeta_next;
    out.iterations = t + 1;
    out.residual = step;
    if (!std::isfinite(step) || out.w.lpNorm<1>() > p.divergence_cap) {
      out.diverged = true;
      return out;
    }
    if (step <= p.delta) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace detail

inline SolveReport steepest_descent(const ReturnMatrix& X, const SteepestDescentParams& params = {}) {
  const double n = static_cast<double>(X.n_assets());
  double eta_w = params.eta_w.value_or(100.0 / n);
  double eta_zeta = params.eta_zeta.value_or(1.0 / n);
  if (!(eta_w > 0.0) || !(eta_zeta > 0.0) || !(params.delta > 0.0) || params.max_iters < 1 ||
      !(params.divergence_cap > 0.0))
    throw DomainError("steepest_descent: step sizes, delta, max_iters and divergence_cap must be positive");

  const Matrix J = covariance_matrix(X);
  if (params.policy == StepPolicy::Auto) {
    const double lambda_max = largest_eigenvalue(J);
    if (lambda_max > 0.0) {
      eta_w = std::min(eta_w, 1.0 / lambda_max);
      const double lambda_min = smallest_eigenvalue(J, lambda_max);
      if (lambda_min > 0.0) eta_zeta = std::min(eta_zeta, lambda_min / n);
    }
  }

  std::size_t total_iters = 0;
  for (int attempt = 0;; ++attempt) {
    auto run = detail::run_descent(J, eta_w, eta_zeta, params);
    total_iters += run.iterations;
    if (run.diverged) {
      if (params.policy == StepPolicy::Auto && attempt < params.max_restarts) {
        eta_w *= 0.5;
        eta_zeta *= 0.5;
        continue;
      }
      throw Diverged("steepest_descent: |w|_1 exceeded " + io::format_double(params.divergence_cap) +
                     " after " + std::to_string(run.iterations) + " iterations with eta_w = " +
                     io::format_double(eta_w) + "; shrink eta_w (and eta_zeta)");
    }
    SolveReport report;
    report.portfolio = Portfolio{std::move(run.w)};
    report.solver_id = SolverId::SteepestDescent;
    report.iterations = total_iters;
    report.converged = run.converged;
    report.residual = run.residual;
    report.well_posed = X.well_posed();
    report.multiplier = run.zeta;
    report.epsilon = risk_per_asset(report.portfolio, X);
    report.q_w = concentration(report.portfolio);
    return report;
  }
}

}  // namespace qport
