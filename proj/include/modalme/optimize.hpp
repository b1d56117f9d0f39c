#pragma once

// Small unconstrained minimizers used by the fitting layer: a Nelder-Mead
// simplex (robust default, derivative-free) and BFGS with analytic gradients
// (fast path for warm-started inner fits).  Convergence is declared on an
// objective change below `tol`; ConvergenceError after `max_iter`.

#include <Eigen/Dense>
#include <functional>
#include <limits>

#include "modalme/errors.hpp"

namespace modalme {

enum class OptimizerKind { nelder_mead, bfgs };

struct OptimOptions {
  OptimizerKind method = OptimizerKind::nelder_mead;
  double tol = 1e-8;
  int max_iter = 5000;
  // When false, hitting max_iter reports converged = false in the result
  // instead of throwing; fit frontends translate per their error contract.
  bool throw_on_max_iter = true;
  // Cap on the BFGS step length per iteration.  All parameters here are
  // O(1), and an uncapped first step (identity inverse Hessian times a large
  // gradient) can leap across a likelihood barrier into a spurious
  // divergence region of the corrected objective.
  double max_step = 1.0;
  // Iterate norm beyond which the run is declared divergent (the corrected
  // objective is unbounded along spurious directions at infinity; genuine
  // estimates on standardized scales stay O(1)).  <= 0 disables the guard.
  double diverge_norm = 100.0;
  // Objective values below this floor are treated as divergence into a
  // spurious unbounded region of the corrected objective (near-pole spikes
  // of the complex-argument likelihood): the simplex sees them as +infinity
  // and the BFGS line search refuses to step onto them.  -infinity disables
  // the guard; the fit layer sets a floor well below any attainable genuine
  // log-likelihood magnitude.
  double f_floor = -std::numeric_limits<double>::infinity();
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradObjectiveFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Nelder-Mead; non-finite objective values are treated as +infinity.
OptimResult minimize_simplex(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const OptimOptions& opts);

// BFGS with backtracking line search; `fg` returns the value and fills the
// gradient.
OptimResult minimize_bfgs(const GradObjectiveFn& fg, const Eigen::VectorXd& x0,
                          const OptimOptions& opts);

}  // namespace modalme
