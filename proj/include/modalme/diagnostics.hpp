#pragma once

// Score-based misspecification diagnostics: the Q statistic built from
// two-component moment scores, regression-calibration covariate
// reconstruction, and the six-step parametric bootstrap p-value.

#include <cstdint>
#include <vector>

#include "modalme/fit.hpp"

namespace modalme {

struct DiagnosticReport {
  double q_observed = 0.0;
  std::vector<double> q_bootstrap;  // one entry per successful replicate
  double p_value = 1.0;
  int m_bootstrap = 0;  // successful replicates (requested M minus failures)
  int b_inner = 0;
  std::uint64_t seed = 0;
  int failures = 0;
};

enum class CalibrationVariant { best_linear, variance_matched };

struct CalibratedCovariates {
  Eigen::VectorXd x_hat;
  double lambda_hat = 1.0;
  double w_grand_mean = 0.0;
  double sigma1_hat2 = 0.0;
  double sigmaW_hat2 = 0.0;
};

// Q = ((n-2)/(2(n-1))) S_bar^T Sigma^-1 S_bar with S_bar the mean row and
// Sigma = {n(n-1)}^-1 sum (S_j - S_bar)(S_j - S_bar)^T; rows are n x 2.
double q_statistic(const Eigen::MatrixXd& score_rows);

// Per-subject corrected diagnostic scores S~_j (n x 2) at omega_hat.
Eigen::MatrixXd corrected_diag_scores(const ModelParams& omega_hat,
                                      LinkFunction link, const Dataset& data,
                                      const TVariateSet& t);

// best_linear: x* = W_bar + lambda (w_bar_j - W_bar); variance_matched uses
// sqrt(lambda) so the reconstructed covariates match the method-of-moments
// mean and variance of x1.  `per_subject_lambda` swaps in the
// replicate-count-weighted reliability ratio min(n_j lambda, 1) per subject.
CalibratedCovariates calibrate_covariates(const Dataset& data,
                                          CalibrationVariant variant,
                                          bool per_subject_lambda = false);

DiagnosticReport bootstrap_pvalue(const Dataset& data, LinkFunction link,
                                  std::size_t B, std::size_t M,
                                  std::uint64_t seed,
                                  const FitOptions& opts = {});

}  // namespace modalme
