#include "modalme/simex.hpp"

#include <cmath>

#include "modalme/rng.hpp"

namespace modalme {

double quadratic_extrapolate(const std::vector<double>& zeta,
                             const std::vector<double>& values,
                             double target) {
  if (zeta.size() != values.size())
    throw DimensionMismatch("zeta grid and value sequence differ in length");
  if (zeta.size() < 3)
    throw GridError("quadratic extrapolation needs at least 3 zeta levels");
  Eigen::MatrixXd X(zeta.size(), 3);
  Eigen::VectorXd y(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = zeta[i];
    X(i, 2) = zeta[i] * zeta[i];
    y(i) = values[i];
  }
  const Eigen::Vector3d coef = X.colPivHouseholderQr().solve(y);
  return coef(0) + coef(1) * target + coef(2) * target * target;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw GridError("zeta grid is empty");
  double prev = 0.0;
  for (double z : grid) {
    if (!(z > prev))
      throw GridError("zeta grid must be positive and ascending");
    prev = z;
  }
}

}  // namespace

FitResult fit_simex(const Dataset& data, LinkFunction link,
                    const SimexConfig& cfg, std::uint64_t seed) {
  validate_dataset(data);
  check_grid(cfg.zeta_grid);
  if (cfg.B < 1) throw ConfigError("SIMEX needs B >= 1 refits per level");
  const double sigma_u2 =
      cfg.sigma_u2 > 0.0 ? cfg.sigma_u2 : estimate_sigma_u2(data);
  if (sigma_u2 < 0.0) throw ConfigError("sigma_u2 must be nonnegative");
  const double sigma_u = std::sqrt(sigma_u2);

  FitOptions base_opts = cfg.fit_options;
  base_opts.compute_covariance = false;
  const FitResult naive = fit_naive(data, link, {}, base_opts);

  FitOptions inner_opts = base_opts;
  inner_opts.throw_on_max_iter = false;

  const std::size_t n_levels = cfg.zeta_grid.size();
  std::vector<Eigen::VectorXd> level_mean(
      n_levels, Eigen::VectorXd::Zero(naive.omega_hat.dim()));
  std::size_t failures = 0, total = 0;
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset perturbed = data;
  for (auto& r : perturbed) r.w.resize(1);

  for (std::size_t zi = 0; zi < n_levels; ++zi) {
    const double amp = std::sqrt(cfg.zeta_grid[zi]) * sigma_u;
    std::size_t ok = 0;
    for (std::size_t b = 0; b < cfg.B; ++b) {
      auto rng = make_rng(seed, streams::simex, zi * cfg.B + b);
      for (std::size_t j = 0; j < data.size(); ++j)
        perturbed[j].w[0] = data[j].w_bar() + amp * normal(rng);
      ++total;
      try {
        const FitResult fit =
            fit_naive(perturbed, link, naive.omega_hat, inner_opts);
        if (!fit.converged) {
          ++failures;
          continue;
        }
        level_mean[zi] += fit.omega_hat.as_vector();
        ++ok;
      } catch (const Error& e) {
        throw ConvergenceError("SIMEX refit failed at zeta index " +
                               std::to_string(zi) + ", draw " +
                               std::to_string(b) + ": " + e.what());
      }
    }
    if (ok == 0)
      throw ConvergenceError("all SIMEX refits failed at zeta index " +
                             std::to_string(zi));
    level_mean[zi] /= static_cast<double>(ok);
  }
  if (failures * 10 > total)
    throw ConvergenceError("more than 10% of SIMEX refits failed (" +
                           std::to_string(failures) + "/" +
                           std::to_string(total) + ")");

  const int dim = naive.omega_hat.dim();
  Eigen::VectorXd extrapolated(dim);
  std::vector<double> series(n_levels);
  for (int i = 0; i < dim; ++i) {
    for (std::size_t zi = 0; zi < n_levels; ++zi) series[zi] = level_mean[zi](i);
    extrapolated(i) = quadratic_extrapolate(cfg.zeta_grid, series, -1.0);
  }

  FitResult out;
  out.omega_hat = ModelParams::from_vector(extrapolated);
  out.objective_value = 0.0;
  out.converged = true;
  out.iterations = static_cast<int>(total - failures);
  out.method = FitMethod::simex;
  out.seed = seed;
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed,
                                           std::size_t replicate_index) {
  auto rng = make_rng(seed, streams::bootstrap, replicate_index);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Eigen::VectorXd simex_bootstrap_se(const Dataset& data, LinkFunction link,
                                   const SimexConfig& cfg, std::size_t n_boot,
                                   std::uint64_t seed) {
  if (n_boot < 2) throw ConfigError("bootstrap needs n_boot >= 2");
  validate_dataset(data);
  std::vector<Eigen::VectorXd> estimates;
  estimates.reserve(n_boot);
  std::size_t failures = 0;
  for (std::size_t t = 0; t < n_boot; ++t) {
    const auto idx = bootstrap_indices(data.size(), seed, t);
    Dataset resample;
    resample.reserve(data.size());
    // The inner seed is a digest of the resample itself, so identical
    // resamples yield identical SIMEX estimates (and zero SE contribution).
    std::uint64_t inner_seed = splitmix64(seed);
    for (std::size_t i : idx) {
      resample.push_back(data[i]);
      inner_seed = splitmix64(inner_seed ^ (i + 0x9e3779b97f4a7c15ULL));
    }
    try {
      const FitResult fit = fit_simex(resample, link, cfg, inner_seed);
      estimates.push_back(fit.omega_hat.as_vector());
    } catch (const Error&) {
      ++failures;
    }
  }
  if (failures * 10 > n_boot)
    throw ConvergenceError("more than 10% of bootstrap resamples failed (" +
                           std::to_string(failures) + "/" +
                           std::to_string(n_boot) + ")");
  const std::size_t k = estimates.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(estimates.front().size());
  for (const auto& e : estimates) mean += e;
  mean /= static_cast<double>(k);
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(mean.size());
  for (const auto& e : estimates) ss += (e - mean).cwiseProduct(e - mean);
  return (ss / static_cast<double>(k - 1)).cwiseSqrt();
}

}  // namespace modalme
