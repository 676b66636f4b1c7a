#pragma once

#include <Eigen/Cholesky>

#include <cmath>

#include "qport/core.hpp"
#include "qport/io.hpp"

namespace qport {

/// Reciprocal condition estimate below which J is treated as singular.
inline constexpr double kMinCovarianceRcond = 1e-12;
/// KKT residual the exact solver must reach to report convergence.
inline constexpr double kExactKktTol = 1e-8;

/// Relative stationarity residual |J w - zeta e|_inf / |J w|_inf with
/// zeta = e^T J w / N, which vanishes at the constrained optimum.
inline double kkt_residual(const Matrix& J, const Vector& w) {
  const Vector g = J * w;
  const double zeta = g.mean();
  const double scale = g.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return 0.0;
  return (g.array() - zeta).abs().maxCoeff() / scale;
}

/// w = N J^-1 e / (e^T J^-1 e) via a Cholesky factorization of J, never an
/// explicit inverse. A second solve gives J^-2 e for the closed-form q_w.
inline SolveReport exact_solve(const ReturnMatrix& X) {
  if (!X.well_posed())
    throw SingularCovariance("exact_solve: p = " + std::to_string(X.n_scenarios()) + " <= N = " +
                             std::to_string(X.n_assets()) + ", covariance is rank deficient");
  const Matrix J = covariance_matrix(X);
  const Eigen::LLT<Matrix> llt(J);
  if (llt.info() != Eigen::Success) throw SingularCovariance("exact_solve: covariance is not positive definite");
  const double rcond = llt.rcond();
  if (!(rcond > kMinCovarianceRcond))
    throw SingularCovariance("exact_solve: covariance is ill-conditioned (rcond " + io::format_double(rcond) + ")");

  const auto n = static_cast<double>(X.n_assets());
  const Vector e = Vector::Ones(J.rows());
  const Vector y1 = llt.solve(e);
  const Vector y2 = llt.solve(y1);
  const double a1 = y1.sum() / n;        // e^T J^-1 e / N
  const double a2 = y2.sum() / n;        // e^T J^-2 e / N

  SolveReport report;
  report.portfolio = Portfolio{y1 * (n / y1.sum())};
  report.solver_id = SolverId::Exact;
  report.iterations = 0;
  report.epsilon = risk_per_asset(report.portfolio, X);
  report.q_w = concentration(report.portfolio);
  report.epsilon_closed_form = 1.0 / (2.0 * a1);
  report.q_w_closed_form = a2 / (a1 * a1);
  report.residual = kkt_residual(J, report.portfolio.weights);
  report.converged = report.residual <= kExactKktTol;
  return report;
}

}  // namespace qport
