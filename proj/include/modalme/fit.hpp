#pragma once

// Point and variance estimation: naive MLE, the Monte-Carlo corrected
// log-likelihood / corrected-score estimators, the known-error-covariance
// variant, and the sandwich covariance.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "modalme/corrected.hpp"
#include "modalme/optimize.hpp"

namespace modalme {

enum class FitMethod { naive, mccl_loglik, mccl_score, mccl_known_sigma, simex };
enum class McclRoute { loglik, score };

struct FitResult {
  ModelParams omega_hat;
  Eigen::MatrixXd covariance;  // empty when not computed
  double objective_value = 0.0;
  bool converged = false;
  int iterations = 0;
  FitMethod method = FitMethod::naive;
  std::uint64_t seed = 0;

  bool has_covariance() const { return covariance.size() > 0; }
  Eigen::VectorXd se() const {
    return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
};

struct FitOptions {
  OptimizerKind optimizer = OptimizerKind::nelder_mead;
  double tol = 1e-8;
  int max_iter = 5000;
  bool compute_covariance = true;
  // When false, iteration-limit runs return converged = false instead of
  // throwing ConvergenceError (used by drop-and-count loops).
  bool throw_on_max_iter = true;
  // Simplex restart after a failed BFGS run.  Drop-and-count loops with a
  // cheaper retry path (fresh Monte-Carlo draws) turn this off.
  bool simplex_rescue = true;
};

// Starting point used when no init is supplied to the naive fit: intercept
// from the link-inverse of the mean response, slopes 0, log m = 1.
ModelParams default_init(const Dataset& data, LinkFunction link);

FitResult fit_naive(const Dataset& data, LinkFunction link,
                    const std::optional<ModelParams>& init = {},
                    const FitOptions& opts = {});

FitResult fit_mccl(const Dataset& data, LinkFunction link, std::size_t B,
                   std::uint64_t seed, McclRoute route = McclRoute::loglik,
                   const std::optional<ModelParams>& init = {},
                   const FitOptions& opts = {});

FitResult fit_mccl_known_sigma(const Dataset& data, LinkFunction link,
                               const Eigen::MatrixXd& sigma_u, std::size_t B,
                               std::uint64_t seed,
                               const std::optional<ModelParams>& init = {},
                               const FitOptions& opts = {});

// V = A^-1 B (A^-1)^T / n with A the mean analytic score Jacobian and B the
// mean score outer product, both at omega_hat with the same frozen T
// variates; SingularityError when cond(A) > 1e12.
Eigen::MatrixXd sandwich_covariance(const Dataset& data, LinkFunction link,
                                    const ModelParams& omega_hat,
                                    const TVariateSet& t);

// Same, but for an already-built objective (shared by the fit frontends).
Eigen::MatrixXd sandwich_from_objective(const CorrectedObjective& obj,
                                        const ModelParams& omega_hat);

}  // namespace modalme
