#pragma once

#include "qport/core.hpp"
#include "qport/solvers/belief_propagation.hpp"
#include "qport/solvers/exact.hpp"
#include "qport/solvers/steepest_descent.hpp"

namespace qport {

struct SolverOptions {
  SteepestDescentParams steepest_descent;
  BPParams belief_propagation;
};

/// Dispatch. Every solver fills epsilon and q_w from the returned portfolio
/// via risk_per_asset and concentration.
inline SolveReport solve(const ReturnMatrix& X, SolverId method, const SolverOptions& options = {}) {
  switch (method) {
    case SolverId::Exact: return exact_solve(X);
    case SolverId::SteepestDescent: return steepest_descent(X, options.steepest_descent);
    case SolverId::BeliefPropagation: return belief_propagation(X, options.belief_propagation);
  }
  throw DomainError("solve: unknown method");
}

}  // namespace qport
