#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modalme/rng.hpp"
#include "modalme/sim_lab.hpp"

using namespace modalme;

TEST_CASE("generate_design: config validation and trivial limits") {
  DesignConfig cfg;
  cfg.n = 50;
  cfg.sigma_u2 = 0.0;
  auto rng = make_rng(1, streams::design);
  const auto gen = generate_design(cfg, rng);
  REQUIRE(gen.data.size() == 50);
  REQUIRE(gen.x1_true.size() == 50);
  for (std::size_t j = 0; j < gen.data.size(); ++j) {
    CHECK(gen.data[j].n_rep() == 3);
    // sigma_u2 = 0: every replicate equals the hidden truth exactly.
    for (double w : gen.data[j].w) CHECK(w == gen.x1_true(j));
    CHECK(gen.data[j].y > 0.0);
    CHECK(gen.data[j].y < 1.0);
    const double x2 = gen.data[j].x_rest(0);
    CHECK((x2 == 0.0 || x2 == 1.0));
  }

  cfg.n = 0;
  CHECK_THROWS_AS(generate_design(cfg, rng), ConfigError);
  cfg.n = 10;
  cfg.sigma_u2 = -1.0;
  CHECK_THROWS_AS(generate_design(cfg, rng), ConfigError);
  cfg.sigma_u2 = 0.5;
  cfg.n_replicates = 0;
  CHECK_THROWS_AS(generate_design(cfg, rng), ConfigError);
  cfg.n_replicates = 3;
  cfg.beta_true = Eigen::VectorXd::Ones(4);  // M1 wants 3
  CHECK_THROWS_AS(generate_design(cfg, rng), ConfigError);

  DesignConfig m4;
  m4.design = Design::M4;
  m4.n = 1;
  CHECK_THROWS_AS(generate_design(m4, rng), ConfigError);
}

TEST_CASE("generate_design (M1): covariate and error moments") {
  DesignConfig cfg;
  cfg.n = 100000;
  cfg.sigma_u2 = 0.6;
  auto rng = make_rng(2, streams::design);
  const auto gen = generate_design(cfg, rng);

  // Measurement-error variance matches sigma_u2 within 2%.
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < gen.data.size(); ++j)
    for (double w : gen.data[j].w) {
      const double u = w - gen.x1_true(j);
      ss += u * u;
      ++count;
    }
  CHECK(ss / count == doctest::Approx(0.6).epsilon(0.02));

  // P(X2 = 1) near 0.5 and E[X1 | X2 = 1] near +1 (3 binomial/normal SEs).
  double n1 = 0.0, sum_x1_given_1 = 0.0;
  for (std::size_t j = 0; j < gen.data.size(); ++j)
    if (gen.data[j].x_rest(0) == 1.0) {
      n1 += 1.0;
      sum_x1_given_1 += gen.x1_true(j);
    }
  const double n = cfg.n;
  CHECK(std::abs(n1 / n - 0.5) < 3.0 * 0.5 / std::sqrt(n));
  CHECK(std::abs(sum_x1_given_1 / n1 - 1.0) < 3.0 / std::sqrt(n1));
}

TEST_CASE("generate_design: variant-specific structure") {
  auto rng = make_rng(3, streams::design);

  SUBCASE("M1_independent_x1 removes the X1-X2 dependence") {
    DesignConfig cfg;
    cfg.design = Design::M1_independent_x1;
    cfg.n = 50000;
    const auto gen = generate_design(cfg, rng);
    double s0 = 0.0, s1 = 0.0, n1 = 0.0;
    for (std::size_t j = 0; j < gen.data.size(); ++j) {
      if (gen.data[j].x_rest(0) == 1.0) {
        s1 += gen.x1_true(j);
        n1 += 1.0;
      } else {
        s0 += gen.x1_true(j);
      }
    }
    const double n0 = cfg.n - n1;
    CHECK(std::abs(s1 / n1) < 3.0 / std::sqrt(n1));
    CHECK(std::abs(s0 / n0) < 3.0 / std::sqrt(n0));
  }

  SUBCASE("M1_laplace errors keep variance 1 with heavier tails") {
    DesignConfig cfg;
    cfg.design = Design::M1_laplace;
    cfg.n = 50000;
    const auto gen = generate_design(cfg, rng);
    double ss = 0.0, s4 = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < gen.data.size(); ++j)
      for (double w : gen.data[j].w) {
        const double u = w - gen.x1_true(j);
        ss += u * u;
        s4 += u * u * u * u;
        ++count;
      }
    const double var = ss / count;
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
    // Laplace excess kurtosis is 3 (kurtosis 6).
    CHECK(s4 / count / (var * var) == doctest::Approx(6.0).epsilon(0.15));
  }

  SUBCASE("M4 responses fill [nudge, 1 - nudge] with two extremes") {
    DesignConfig cfg;
    cfg.design = Design::M4;
    cfg.n = 300;
    cfg.sigma_u2 = 1.2;
    const auto gen = generate_design(cfg, rng);
    int at_lo = 0, at_hi = 0;
    for (const auto& r : gen.data) {
      CHECK(r.y >= 1e-6);
      CHECK(r.y <= 1.0 - 1e-6);
      if (r.y == 1e-6) ++at_lo;
      if (r.y == 1.0 - 1e-6) ++at_hi;
    }
    CHECK(at_lo == 1);
    CHECK(at_hi == 1);
  }

  SUBCASE("M2 defaults use the four-parameter quadratic predictor") {
    DesignConfig cfg;
    cfg.design = Design::M2;
    cfg.n = 10;
    CHECK(design_default_beta(Design::M2).size() == 4);
    CHECK(design_default_m(Design::M2) == 40.0);
    const auto gen = generate_design(cfg, rng);  // must accept 4 betas
    CHECK(gen.data.size() == 10);
    cfg.beta_true = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(generate_design(cfg, rng), ConfigError);
  }
}

TEST_CASE("run_study: single replicate is the single fit") {
  StudyConfig cfg;
  cfg.design.n = 120;
  cfg.design.sigma_u2 = 0.6;
  cfg.n_replicates_mc = 1;
  cfg.seed = 11;
  cfg.B = 30;
  cfg.fit_options.optimizer = OptimizerKind::bfgs;
  const auto summary = run_study(cfg);
  REQUIRE(summary.naive.has_value());
  REQUIRE(summary.mccl.has_value());
  CHECK(summary.failures == 0);

  // Reproduce the one replicate by hand.
  auto rng = make_rng(cfg.seed, streams::study, 0);
  const auto gen = generate_design(cfg.design, rng);
  const LinkFunction logit{LinkKind::logit};
  FitOptions naive_opts = cfg.fit_options;
  const auto naive = fit_naive(gen.data, logit, {}, naive_opts);
  const auto mccl =
      fit_mccl(gen.data, logit, cfg.B, derive_seed(cfg.seed, streams::study, 0),
               McclRoute::loglik, naive.omega_hat, cfg.fit_options);
  CHECK((summary.naive->median - naive.omega_hat.as_vector()).norm() == 0.0);
  CHECK((summary.mccl->median - mccl.omega_hat.as_vector()).norm() == 0.0);
  CHECK(summary.naive->iqr.norm() == 0.0);
  CHECK(summary.mccl->iqr.norm() == 0.0);
  CHECK((summary.mccl->se_mean - mccl.se()).norm() == 0.0);
  CHECK(summary.mccl->empirical_sd.norm() == 0.0);
}

TEST_CASE("run_study: determinism across worker counts") {
  StudyConfig cfg;
  cfg.design.n = 60;
  cfg.design.sigma_u2 = 0.6;
  cfg.n_replicates_mc = 8;
  cfg.seed = 5;
  cfg.B = 20;
  cfg.fit_options.optimizer = OptimizerKind::bfgs;
  cfg.workers = 1;
  const auto a = run_study(cfg);
  cfg.workers = 3;
  const auto b = run_study(cfg);
  REQUIRE(a.mccl.has_value());
  REQUIRE(b.mccl.has_value());
  CHECK(a.mccl->median == b.mccl->median);
  CHECK(a.mccl->iqr == b.mccl->iqr);
  CHECK(a.mccl->se_mean == b.mccl->se_mean);
  CHECK(a.naive->median == b.naive->median);
  CHECK(a.failures == b.failures);
}

TEST_CASE("run_study: attenuation pattern on (M1) at moderate scale") {
  // Naive slope for the error-prone covariate sits below the MCCL slope,
  // which in turn lands near the truth 0.25.
  StudyConfig cfg;
  cfg.design.n = 200;
  cfg.design.sigma_u2 = 1.2;
  cfg.n_replicates_mc = 60;
  cfg.seed = 21;
  cfg.B = 50;
  cfg.fit_options.optimizer = OptimizerKind::bfgs;
  const auto summary = run_study(cfg);
  REQUIRE(summary.naive.has_value());
  REQUIRE(summary.mccl.has_value());
  CHECK(summary.naive->median(1) < summary.mccl->median(1));
  CHECK(summary.mccl->median(1) == doctest::Approx(0.25).epsilon(0.45));
  CHECK(std::abs(summary.naive->median(1) - 0.25) >
        std::abs(summary.mccl->median(1) - 0.25) - 0.02);
}

TEST_CASE("run_study: config errors") {
  StudyConfig cfg;
  cfg.n_replicates_mc = 0;
  CHECK_THROWS_AS(run_study(cfg), ConfigError);
  cfg.n_replicates_mc = 1;
  cfg.fit_naive = cfg.fit_mccl = cfg.run_diagnostic = false;
  CHECK_THROWS_AS(run_study(cfg), ConfigError);
}

TEST_CASE("design_from_string round trip") {
  for (auto d : {Design::M1, Design::M2, Design::M3, Design::M4,
                 Design::M1_independent_x1, Design::M1_laplace})
    CHECK(design_from_string(design_to_string(d)) == d);
  CHECK(design_from_string("M1_laplace") == Design::M1_laplace);
  CHECK_THROWS_AS(design_from_string("M9"), ConfigError);
}
