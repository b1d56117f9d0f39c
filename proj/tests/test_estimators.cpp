#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "modalme/fit.hpp"
#include "modalme/rng.hpp"
#include "modalme/simex.hpp"

using namespace modalme;

namespace {

const LinkFunction kLogit{LinkKind::logit};

ModelParams m1_truth() {
  ModelParams p;
  p.beta = Eigen::VectorXd(3);
  p.beta << 0.25, 0.25, 0.25;
  p.log_m = std::log(3.0);
  return p;
}

// Design (M1): X2 ~ Bernoulli(0.5), X1 | X2 ~ N(2*I(X2=1) - 1, 1), logit
// link, surrogate replicates W = x1 + N(0, sigma_u2).
Dataset m1_data(int n, int n_rep, double sigma_u2, std::mt19937_64& rng,
                const ModelParams& omega = m1_truth()) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution bern(0.5);
  const double su = std::sqrt(sigma_u2);
  Dataset data;
  data.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double x2 = bern(rng) ? 1.0 : 0.0;
    const double x1 = (2.0 * x2 - 1.0) + normal(rng);
    Eigen::VectorXd x(2);
    x << x1, x2;
    SurrogateRecord r;
    r.y = sample_response(mode_theta(omega, kLogit, x), omega.m(), rng);
    r.x_rest = Eigen::VectorXd(1);
    r.x_rest << x2;
    for (int k = 0; k < n_rep; ++k) r.w.push_back(x1 + su * normal(rng));
    data.push_back(std::move(r));
  }
  return data;
}

}  // namespace

TEST_CASE("fit_naive: consistency on error-free data and score residual") {
  auto rng = make_rng(101, streams::design);
  const auto truth = m1_truth();
  const auto data = m1_data(5000, 1, 0.0, rng);
  const auto fit = fit_naive(data, kLogit);
  CHECK(fit.converged);
  CHECK(fit.method == FitMethod::naive);
  REQUIRE(fit.has_covariance());

  const Eigen::VectorXd est = fit.omega_hat.as_vector();
  const Eigen::VectorXd se = fit.se();
  const Eigen::VectorXd tru = truth.as_vector();
  for (int i = 0; i < 4; ++i) {
    CHECK(se(i) > 0.0);
    CHECK(std::abs(est(i) - tru(i)) < 3.0 * se(i));
  }

  // Summed naive score at the reported optimum.
  Eigen::VectorXd total = Eigen::VectorXd::Zero(4);
  for (const auto& r : data)
    total += score(fit.omega_hat, kLogit, {r.y, r.naive_x()});
  CHECK(total.norm() < 1e-6);

  // Covariance is symmetric PSD.
  CHECK((fit.covariance - fit.covariance.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("fit_naive: rank-deficient design raises RankError") {
  auto rng = make_rng(102, streams::design);
  auto data = m1_data(50, 1, 0.0, rng);
  for (auto& r : data) r.x_rest(0) = 1.0;  // x2 duplicates the intercept
  CHECK_THROWS_AS(fit_naive(data, kLogit), RankError);
}

TEST_CASE("fit_mccl: preconditions and zero-variance bitwise reduction") {
  auto rng = make_rng(103, streams::design);
  auto data = m1_data(60, 3, 0.6, rng);
  CHECK_THROWS_AS(fit_mccl(data, kLogit, 0, 1), ConfigError);

  auto singles = data;
  for (auto& r : singles) r.w.resize(1);
  CHECK_THROWS_AS(fit_mccl(singles, kLogit, 50, 1), NoReplicatesError);

  // Identical replicates: s2 = 0 everywhere, so MCCL must reproduce the
  // naive optimizer trajectory bitwise.
  auto degenerate = data;
  for (auto& r : degenerate) r.w.assign(3, r.w[0]);
  const auto naive = fit_naive(degenerate, kLogit);
  const auto mccl = fit_mccl(degenerate, kLogit, 50, 7);
  CHECK(naive.omega_hat.as_vector() == mccl.omega_hat.as_vector());
  CHECK(naive.objective_value == mccl.objective_value);
  CHECK(naive.covariance == mccl.covariance);
}

TEST_CASE("fit_mccl: determinism in (data, seed, B)") {
  auto rng = make_rng(104, streams::design);
  const auto data = m1_data(80, 3, 0.6, rng);
  const auto a = fit_mccl(data, kLogit, 40, 12345);
  const auto b = fit_mccl(data, kLogit, 40, 12345);
  CHECK(a.omega_hat.as_vector() == b.omega_hat.as_vector());
  CHECK(a.covariance == b.covariance);
  CHECK(a.objective_value == b.objective_value);
  const auto c = fit_mccl(data, kLogit, 40, 54321);
  CHECK(a.omega_hat.as_vector() != c.omega_hat.as_vector());
}

TEST_CASE("fit_mccl: loglik and score routes agree within 2 SE") {
  auto rng = make_rng(105, streams::design);
  const auto data = m1_data(200, 3, 0.6, rng);
  const auto loglik = fit_mccl(data, kLogit, 100, 9, McclRoute::loglik);
  const auto score_route = fit_mccl(data, kLogit, 100, 9, McclRoute::score);
  CHECK(loglik.converged);
  CHECK(score_route.converged);
  const Eigen::VectorXd se = loglik.se();
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(loglik.omega_hat.as_vector()(i) -
                   score_route.omega_hat.as_vector()(i)) < 2.0 * se(i));
  // Loglik-route optimum also nearly solves the estimating equations.
  std::vector<int> n_j(data.size(), 3);
  auto t_rng = make_rng(9, streams::t_variates);
  const auto t = draw_t_variates(data.size(), n_j, 100, t_rng);
  const auto obj = CorrectedObjective::replicate(data, kLogit, t);
  const Eigen::VectorXd s =
      obj.scores(loglik.omega_hat).colwise().sum().transpose();
  CHECK(s.norm() < 1e-5 * static_cast<double>(data.size()));
}

TEST_CASE("sandwich A matrix matches finite differences of the score sum") {
  auto rng = make_rng(106, streams::design);
  const auto data = m1_data(50, 2, 0.6, rng);
  std::vector<int> n_j(data.size(), 2);
  auto t_rng = make_rng(3, streams::t_variates);
  const auto t = draw_t_variates(data.size(), n_j, 10, t_rng);
  const auto obj = CorrectedObjective::replicate(data, kLogit, t);
  ModelParams probe;
  probe.beta = Eigen::VectorXd(3);
  probe.beta << 0.2, 0.3, 0.2;
  probe.log_m = 1.0;
  const Eigen::MatrixXd A = obj.score_jacobian_sum(probe);
  const double h = 1e-5;
  const Eigen::VectorXd v = probe.as_vector();
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd vu = v, vd = v;
    vu(i) += h;
    vd(i) -= h;
    const Eigen::VectorXd fd =
        (obj.scores(ModelParams::from_vector(vu)).colwise().sum() -
         obj.scores(ModelParams::from_vector(vd)).colwise().sum())
            .transpose() /
        (2.0 * h);
    for (int r = 0; r < 4; ++r)
      CHECK(A(r, i) == doctest::Approx(fd(r)).epsilon(1e-4).scale(
                           std::max(1.0, std::abs(A(r, i)))));
  }

  // The public entry point agrees with the internal helper.
  const auto fit = fit_mccl(data, kLogit, 10, 3);
  const auto V = sandwich_covariance(data, kLogit, fit.omega_hat, t);
  CHECK((V - fit.covariance).norm() < 1e-12 * V.norm());
}

TEST_CASE("fit_mccl_known_sigma: zero covariance reduces to naive bitwise") {
  auto rng = make_rng(107, streams::design);
  auto data = m1_data(60, 1, 0.6, rng);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const auto naive = fit_naive(data, kLogit);
  const auto ks = fit_mccl_known_sigma(data, kLogit, zero, 30, 5);
  CHECK(naive.omega_hat.as_vector() == ks.omega_hat.as_vector());
  CHECK(naive.covariance == ks.covariance);
  CHECK(ks.method == FitMethod::mccl_known_sigma);
}

TEST_CASE("fit_mccl_known_sigma: corrects naive attenuation, single dataset") {
  auto rng = make_rng(108, streams::design);
  const auto data = m1_data(2000, 1, 0.6, rng);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
  sigma(0, 0) = 0.6;
  const auto naive = fit_naive(data, kLogit);
  const auto ks = fit_mccl_known_sigma(data, kLogit, sigma, 100, 17);
  const double b1_true = 0.25;
  CHECK(naive.omega_hat.beta(1) < b1_true);  // attenuation
  CHECK(std::abs(ks.omega_hat.beta(1) - b1_true) <
        std::abs(naive.omega_hat.beta(1) - b1_true));
}

TEST_CASE("quadratic extrapolation is exact on quadratic sequences") {
  const std::vector<double> zeta{0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  const double a = 0.8, b = -0.35, c = 0.12;
  std::vector<double> vals;
  for (double z : zeta) vals.push_back(a + b * z + c * z * z);
  CHECK(quadratic_extrapolate(zeta, vals) ==
        doctest::Approx(a - b + c).epsilon(1e-10));
  CHECK_THROWS_AS(quadratic_extrapolate({0.5, 1.0}, {1.0, 2.0}), GridError);
}

TEST_CASE("fit_simex: degenerate error variance collapses to naive") {
  auto rng = make_rng(109, streams::design);
  const auto data = m1_data(60, 2, 0.6, rng);
  SimexConfig cfg;
  cfg.sigma_u2 = 1e-20;
  cfg.B = 3;
  // Machine-tight inner fits: the zeta = -1 extrapolation amplifies any
  // optimizer slack in the (identical up to ~1e-10) refits.
  cfg.fit_options.tol = 1e-14;
  const auto naive = fit_naive(data, kLogit, {}, cfg.fit_options);
  const auto simex = fit_simex(data, kLogit, cfg, 21);
  CHECK(simex.method == FitMethod::simex);
  CHECK((simex.omega_hat.as_vector() - naive.omega_hat.as_vector()).norm() <
        1e-6);

  SimexConfig bad = cfg;
  bad.zeta_grid = {};
  CHECK_THROWS_AS(fit_simex(data, kLogit, bad, 21), GridError);
  bad.zeta_grid = {0.5, 0.25};
  CHECK_THROWS_AS(fit_simex(data, kLogit, bad, 21), GridError);
}

TEST_CASE("simex_bootstrap_se: identical resamples give zero, real ones not") {
  auto rng = make_rng(110, streams::design);
  const auto data = m1_data(6, 2, 0.4, rng);

  // Find a seed whose first two bootstrap index draws coincide and whose
  // resample keeps the design well conditioned (>= 5 distinct subjects and
  // both x2 levels present).
  std::uint64_t degenerate_seed = 0;
  bool found = false;
  for (std::uint64_t s = 0; s < 5000000 && !found; ++s) {
    auto i0 = bootstrap_indices(6, s, 0);
    if (i0 != bootstrap_indices(6, s, 1)) continue;
    std::sort(i0.begin(), i0.end());
    const auto distinct = std::unique(i0.begin(), i0.end()) - i0.begin();
    if (distinct < 5) continue;
    bool has0 = false, has1 = false;
    for (auto i : bootstrap_indices(6, s, 0)) {
      has0 = has0 || data[i].x_rest(0) == 0.0;
      has1 = has1 || data[i].x_rest(0) == 1.0;
    }
    if (has0 && has1) {
      degenerate_seed = s;
      found = true;
    }
  }
  REQUIRE(found);

  SimexConfig cfg;
  cfg.sigma_u2 = 0.4;
  cfg.B = 2;
  cfg.zeta_grid = {0.25, 0.5, 0.75, 1.0};
  const auto se0 = simex_bootstrap_se(data, kLogit, cfg, 2, degenerate_seed);
  CHECK(se0.norm() == 0.0);

  // On a real dataset the bootstrap SEs are strictly positive.
  auto rng2 = make_rng(111, streams::design);
  const auto bigger = m1_data(40, 2, 0.4, rng2);
  const auto se = simex_bootstrap_se(bigger, kLogit, cfg, 4, 77);
  for (int i = 0; i < se.size(); ++i) CHECK(se(i) > 0.0);
  CHECK_THROWS_AS(simex_bootstrap_se(bigger, kLogit, cfg, 1, 77), ConfigError);
}
