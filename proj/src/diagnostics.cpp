#include "modalme/diagnostics.hpp"

#include <cmath>

#include "modalme/rng.hpp"

namespace modalme {

double q_statistic(const Eigen::MatrixXd& score_rows) {
  const auto n = score_rows.rows();
  if (score_rows.cols() != 2)
    throw DimensionMismatch("diagnostic score rows must have 2 components");
  if (n < 3) throw ConfigError("Q statistic needs at least 3 subjects");
  const Eigen::Vector2d s_bar = score_rows.colwise().mean().transpose();
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Vector2d d = score_rows.row(j).transpose() - s_bar;
    sigma += d * d.transpose();
  }
  sigma /= static_cast<double>(n) * static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularityError("diagnostic score covariance is singular");
  const double nn = static_cast<double>(n);
  return (nn - 2.0) / (2.0 * (nn - 1.0)) *
         s_bar.dot(sigma.inverse() * s_bar);
}

Eigen::MatrixXd corrected_diag_scores(const ModelParams& omega_hat,
                                      LinkFunction link, const Dataset& data,
                                      const TVariateSet& t) {
  return CorrectedObjective::replicate(data, link, t).diag_scores(omega_hat);
}

CalibratedCovariates calibrate_covariates(const Dataset& data,
                                          CalibrationVariant variant,
                                          bool per_subject_lambda) {
  validate_dataset(data);
  const auto n = data.size();
  if (n < 2) throw ConfigError("calibration needs at least 2 subjects");
  CalibratedCovariates out;
  Eigen::VectorXd w_bar(n);
  for (std::size_t j = 0; j < n; ++j) w_bar(j) = data[j].w_bar();
  out.w_grand_mean = w_bar.mean();
  out.sigmaW_hat2 =
      (w_bar.array() - out.w_grand_mean).square().sum() /
      static_cast<double>(n - 1);
  if (out.sigmaW_hat2 <= 0.0)
    throw DegenerateError("surrogate means have zero sample variance");
  const double sigma_u2 = estimate_sigma_u2(data);
  out.sigma1_hat2 = std::max(out.sigmaW_hat2 - sigma_u2, 0.0);
  out.lambda_hat = out.sigma1_hat2 / out.sigmaW_hat2;

  out.x_hat.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double lam = out.lambda_hat;
    if (per_subject_lambda)
      lam = std::min(data[j].n_rep() * out.lambda_hat, 1.0);
    const double shrink =
        variant == CalibrationVariant::best_linear ? lam : std::sqrt(lam);
    out.x_hat(j) = out.w_grand_mean + shrink * (w_bar(j) - out.w_grand_mean);
  }
  return out;
}

DiagnosticReport bootstrap_pvalue(const Dataset& data, LinkFunction link,
                                  std::size_t B, std::size_t M,
                                  std::uint64_t seed, const FitOptions& opts) {
  validate_dataset(data);
  if (M < 1) throw ConfigError("bootstrap needs M >= 1");

  // Step 1: MCCL fit on the observed data.
  const FitResult outer = fit_mccl(data, link, B, seed, McclRoute::loglik, {},
                                   opts);

  // Step 2: observed test statistic, reusing the fit's frozen T variates.
  std::vector<int> n_j;
  n_j.reserve(data.size());
  for (const auto& r : data) n_j.push_back(r.n_rep());
  auto t_rng = make_rng(seed, streams::t_variates);
  const auto t_obs = draw_t_variates(data.size(), n_j, B, t_rng);
  const double q_obs = q_statistic(
      corrected_diag_scores(outer.omega_hat, link, data, t_obs));

  // Calibrated covariates (variance-matched form) and fitted modes.
  const auto cal =
      calibrate_covariates(data, CalibrationVariant::variance_matched);
  const double m_hat = outer.omega_hat.m();
  std::vector<double> theta_hat(data.size()), s_j(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    Eigen::VectorXd x(1 + data[j].x_rest.size());
    x(0) = cal.x_hat(j);
    x.tail(data[j].x_rest.size()) = data[j].x_rest;
    theta_hat[j] = mode_theta(outer.omega_hat, link, x);
    s_j[j] = std::sqrt(data[j].s2());
  }

  FitOptions inner_opts = opts;
  inner_opts.compute_covariance = false;
  inner_opts.throw_on_max_iter = false;
  // Fail fast: the retry below with fresh T variates is cheaper and more
  // effective than a simplex rescue of a stalled trajectory.
  inner_opts.simplex_rescue = false;

  DiagnosticReport report;
  report.q_observed = q_obs;
  report.b_inner = static_cast<int>(B);
  report.seed = seed;

  Dataset boot = data;
  std::size_t exceed = 0;
  for (std::size_t d = 0; d < M; ++d) {
    // Step 3: regenerate responses from the fitted null model and surrogates
    // around the calibrated covariates with subject-specific error SD S_j.
    auto rng = make_rng(seed, streams::bootstrap, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < data.size(); ++j) {
      boot[j].y = sample_response(theta_hat[j], m_hat, rng);
      for (auto& w : boot[j].w) w = cal.x_hat(j) + s_j[j] * normal(rng);
    }
    try {
      // Step 4: refit, warm-started at the observed-data estimate.  The
      // usable region of the corrected objective depends on the finite
      // Monte-Carlo draws, so a failed refit gets one retry with fresh T
      // variates before it is dropped.
      FitResult fit;
      std::uint64_t inner_seed = 0;
      for (int attempt = 0; attempt < 2; ++attempt) {
        inner_seed = derive_seed(seed, streams::bootstrap_fit, d + attempt * M);
        fit = fit_mccl(boot, link, B, inner_seed, McclRoute::loglik,
                       outer.omega_hat, inner_opts);
        if (fit.converged) break;
      }
      if (!fit.converged) {
        ++report.failures;
        continue;
      }
      // Step 5: recompute the statistic on the bootstrap dataset.
      auto inner_t_rng = make_rng(inner_seed, streams::t_variates);
      const auto t_d = draw_t_variates(boot.size(), n_j, B, inner_t_rng);
      const double q_d =
          q_statistic(corrected_diag_scores(fit.omega_hat, link, boot, t_d));
      report.q_bootstrap.push_back(q_d);
      if (q_d > q_obs) ++exceed;
    } catch (const Error&) {
      ++report.failures;
    }
  }
  if (static_cast<std::size_t>(report.failures) * 10 > M)
    throw ConvergenceError("more than 10% of bootstrap replicates failed (" +
                           std::to_string(report.failures) + "/" +
                           std::to_string(M) + ")");

  // Step 6: exceedance fraction over the effective replicate count.
  report.m_bootstrap = static_cast<int>(report.q_bootstrap.size());
  report.p_value = report.m_bootstrap == 0
                       ? 1.0
                       : static_cast<double>(exceed) / report.m_bootstrap;
  return report;
}

}  // namespace modalme
