#pragma once

// Domain types for the budget-constrained minimum-variance problem
//
//   minimize  H(w|X) = 1/2 sum_mu ( N^{-1/2} sum_i x_{i mu} w_i )^2
//   s.t.      sum_i w_i = N
//
// plus the two per-asset metrics every solver and experiment reports:
// the risk per asset eps = H/N and the concentration q_w = |w|^2 / N.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "qport/errors.hpp"

namespace qport {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// N x p return realization. Entries are the raw x_{i mu} (row i = asset,
/// column mu = scenario) with per-asset variance s_i; the 1/sqrt(N)
/// normalization is applied only inside the risk and covariance functions.
class ReturnMatrix {
 public:
  ReturnMatrix(Matrix entries, Vector variances)
      : entries_(std::move(entries)), variances_(std::move(variances)) {
    if (entries_.rows() < 1 || entries_.cols() < 1)
      throw DimensionMismatch("ReturnMatrix: need at least one asset and one scenario");
    if (variances_.size() != entries_.rows())
      throw DimensionMismatch("ReturnMatrix: " + std::to_string(variances_.size()) +
                              " variances for " + std::to_string(entries_.rows()) + " assets");
    for (Eigen::Index i = 0; i < variances_.size(); ++i) {
      const double s = variances_[i];
      if (!std::isfinite(s) || s <= 0.0)
        throw DomainError("ReturnMatrix: variance of asset " + std::to_string(i) +
                          " must be finite and positive");
    }
  }

  std::size_t n_assets() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t n_scenarios() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  double alpha() const noexcept {
    return static_cast<double>(n_scenarios()) / static_cast<double>(n_assets());
  }
  /// p > N; the optimum is unique only in this regime.
  bool well_posed() const noexcept { return n_scenarios() > n_assets(); }

  const Matrix& entries() const noexcept { return entries_; }
  const Vector& variances() const noexcept { return variances_; }

 private:
  Matrix entries_;
  Vector variances_;
};

/// Investment ratios w. Short positions (negative weights) are legal.
struct Portfolio {
  Vector weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights.size()); }

  static Portfolio equipartition(std::size_t n) { return {Vector::Ones(static_cast<Eigen::Index>(n))}; }
};

enum class SolverId { Exact, SteepestDescent, BeliefPropagation };

inline std::string_view to_string(SolverId id) noexcept {
  switch (id) {
    case SolverId::Exact: return "exact";
    case SolverId::SteepestDescent: return "sd";
    case SolverId::BeliefPropagation: return "bp";
  }
  return "?";
}

inline SolverId parse_solver_id(std::string_view s) {
  if (s == "exact") return SolverId::Exact;
  if (s == "sd" || s == "steepest-descent") return SolverId::SteepestDescent;
  if (s == "bp" || s == "belief-propagation") return SolverId::BeliefPropagation;
  throw ParseError("unknown solver '" + std::string(s) + "' (expected exact|sd|bp)");
}

struct SolveReport {
  Portfolio portfolio;
  double epsilon = 0.0;
  double q_w = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  SolverId solver_id = SolverId::Exact;
  /// Final value of the solver's own stopping metric.
  double residual = 0.0;
  bool well_posed = true;

  // Exact solver: eps and q_w from e^T J^-1 e and e^T J^-2 e.
  std::optional<double> epsilon_closed_form;
  std::optional<double> q_w_closed_form;

  // Belief propagation: mean susceptibilities and the budget multiplier.
  std::optional<double> mean_chi_w;
  std::optional<double> mean_chi_u;
  std::optional<double> multiplier;
};

namespace detail {
inline void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

/// eps = H(w|X) / N with H = 1/2 sum_mu (N^{-1/2} x_mu . w)^2.
inline double risk_per_asset(const Portfolio& w, const ReturnMatrix& X) {
  detail::require_same(w.size(), X.n_assets(), "risk_per_asset: portfolio vs assets");
  const double n = static_cast<double>(X.n_assets());
  const Vector projected = X.entries().transpose() * w.weights;
  return 0.5 * projected.squaredNorm() / n / n;
}

/// q_w = (1/N) sum_i w_i^2.
inline double concentration(const Portfolio& w) {
  if (w.size() == 0) throw DimensionMismatch("concentration: empty portfolio");
  return w.weights.squaredNorm() / static_cast<double>(w.size());
}

/// J_ij = (1/N) sum_mu x_{i mu} x_{j mu}.
inline Matrix covariance_matrix(const ReturnMatrix& X) {
  const double n = static_cast<double>(X.n_assets());
  Matrix J = Matrix::Zero(X.entries().rows(), X.entries().rows());
  J.selfadjointView<Eigen::Lower>().rankUpdate(X.entries(), 1.0 / n);
  return J.selfadjointView<Eigen::Lower>();
}

/// |sum_i w_i - N|, with N the number of assets unless given.
inline double budget_residual(const Portfolio& w, std::optional<std::size_t> n = std::nullopt) {
  return std::abs(w.weights.sum() - static_cast<double>(n.value_or(w.size())));
}

// Budget tolerances, relative to N.
inline constexpr double kIterativeBudgetTol = 1e-6;
inline constexpr double kExactBudgetTol = 1e-10;

}  // namespace qport
