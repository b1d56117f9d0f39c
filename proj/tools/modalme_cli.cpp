// Command-line driver: fit / diagnose / simulate with JSON reports.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modalme/io.hpp"
#include "modalme/rng.hpp"
#include "modalme/simex.hpp"

namespace {

using namespace modalme;

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) ||
      dynamic_cast<const NoReplicatesError*>(&e))
    return 2;
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  return 3;  // convergence/singularity/pole/grid/rank/degenerate
}

struct CommonOpts {
  std::string data_path;
  std::string out_path;
  std::string link = "logit";
  std::string optimizer = "nelder-mead";
  double tol = 1e-8;
  int max_iter = 5000;
  bool boundary_transform = false;
  std::optional<std::uint64_t> seed;
};

FitOptions fit_options(const CommonOpts& c) {
  FitOptions o;
  if (c.optimizer == "nelder-mead" || c.optimizer == "nm")
    o.optimizer = OptimizerKind::nelder_mead;
  else if (c.optimizer == "bfgs")
    o.optimizer = OptimizerKind::bfgs;
  else
    throw ConfigError("unknown optimizer: " + c.optimizer);
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  return o;
}

std::uint64_t require_seed(const CommonOpts& c) {
  if (!c.seed)
    throw ConfigError("--seed is required for stochastic commands");
  return *c.seed;
}

void add_common(CLI::App* cmd, CommonOpts& c, bool with_data) {
  if (with_data)
    cmd->add_option("--data", c.data_path, "Dataset CSV (y,w_1..w_K,x_2..x_p)")
        ->required();
  cmd->add_option("--out", c.out_path, "Write the JSON report here");
  cmd->add_option("--link", c.link, "Link function")
      ->check(CLI::IsMember({"logit", "probit", "loglog", "cloglog"}))
      ->capture_default_str();
  cmd->add_option("--optimizer", c.optimizer, "Optimizer")
      ->check(CLI::IsMember({"nelder-mead", "nm", "bfgs"}))
      ->capture_default_str();
  cmd->add_option("--tol", c.tol, "Convergence tolerance")
      ->capture_default_str();
  cmd->add_option("--max-iter", c.max_iter, "Iteration limit")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "RNG seed (required when stochastic)");
  if (with_data)
    cmd->add_flag("--boundary-transform", c.boundary_transform,
                  "Apply y' = {y(n-1)+0.5}/n before the domain check");
}

nlohmann::json common_config(const CommonOpts& c, bool with_data) {
  nlohmann::json j{{"link", c.link},
                   {"optimizer", c.optimizer},
                   {"tol", c.tol},
                   {"max_iter", c.max_iter}};
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  if (with_data) {
    j["data"] = c.data_path;
    j["boundary_transform"] = c.boundary_transform;
  }
  return j;
}

void print_fit(const FitResult& fit) {
  std::printf("method        %s\n", fit_method_to_string(fit.method).c_str());
  std::printf("converged     %s (%d iterations)\n",
              fit.converged ? "yes" : "no", fit.iterations);
  const bool se = fit.has_covariance();
  const Eigen::VectorXd ses = se ? fit.se() : Eigen::VectorXd();
  for (Eigen::Index i = 0; i < fit.omega_hat.beta.size(); ++i) {
    std::printf("beta_%-8ld %12.6f", static_cast<long>(i),
                fit.omega_hat.beta(i));
    if (se) std::printf("   (SE %.6f)", ses(i));
    std::printf("\n");
  }
  std::printf("log_m         %12.6f", fit.omega_hat.log_m);
  if (se) std::printf("   (SE %.6f)", ses(ses.size() - 1));
  std::printf("\nm             %12.6f\n", fit.omega_hat.m());
}

int cmd_fit(const CommonOpts& common, const std::string& method,
            const std::string& route, std::size_t B, double sigma_u2,
            std::size_t simex_B, const std::vector<double>& zeta_grid,
            std::size_t n_boot) {
  const LinkFunction link{link_from_string(common.link)};
  const FitOptions opts = fit_options(common);
  const auto data = parse_dataset(common.data_path, common.boundary_transform);

  FitResult fit;
  nlohmann::json extra;
  if (method == "naive") {
    fit = fit_naive(data, link, {}, opts);
  } else if (method == "mccl") {
    const auto r = route == "score" ? McclRoute::score : McclRoute::loglik;
    fit = fit_mccl(data, link, B, require_seed(common), r, {}, opts);
  } else if (method == "mccl-known-sigma") {
    if (!(sigma_u2 > 0.0))
      throw ConfigError("--sigma-u2 > 0 is required for mccl-known-sigma");
    const int p = 1 + static_cast<int>(data.front().x_rest.size());
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
    sigma(0, 0) = sigma_u2;
    fit = fit_mccl_known_sigma(data, link, sigma, B, require_seed(common), {},
                               opts);
  } else {  // simex
    SimexConfig cfg;
    cfg.sigma_u2 = sigma_u2;
    cfg.B = simex_B;
    if (!zeta_grid.empty()) cfg.zeta_grid = zeta_grid;
    cfg.fit_options = opts;
    const std::uint64_t seed = require_seed(common);
    if (cfg.sigma_u2 <= 0.0) {
      bool any_rep = false;
      for (const auto& r : data) any_rep = any_rep || r.n_rep() >= 2;
      if (!any_rep)
        throw NoReplicatesError(
            "simex needs replicate surrogates or an explicit --sigma-u2");
    }
    fit = fit_simex(data, link, cfg, seed);
    if (n_boot > 0) {
      const Eigen::VectorXd se =
          simex_bootstrap_se(data, link, cfg, n_boot, seed);
      extra["bootstrap_se"] = nlohmann::json::array();
      for (Eigen::Index i = 0; i < se.size(); ++i)
        extra["bootstrap_se"].push_back(se(i));
      extra["n_boot"] = n_boot;
    }
  }

  print_fit(fit);
  if (!common.out_path.empty()) {
    nlohmann::json config = common_config(common, true);
    config["method"] = method;
    config["route"] = route;
    config["B"] = B;
    config["sigma_u2"] =
        sigma_u2 > 0.0 ? nlohmann::json(sigma_u2) : nlohmann::json(nullptr);
    config["simex_B"] = simex_B;
    config["zeta_grid"] =
        zeta_grid.empty() ? SimexConfig{}.zeta_grid : zeta_grid;
    config["n_boot"] = n_boot;
    nlohmann::json result = to_json(fit);
    for (auto& [k, v] : extra.items()) result[k] = v;
    write_report(common.out_path, make_report("fit", config, result));
  }
  return 0;
}

int cmd_diagnose(const CommonOpts& common, std::size_t B, std::size_t M) {
  const LinkFunction link{link_from_string(common.link)};
  const auto data = parse_dataset(common.data_path, common.boundary_transform);
  const auto report = bootstrap_pvalue(data, link, B, M, require_seed(common),
                                       fit_options(common));
  std::printf("Q observed    %12.6f\n", report.q_observed);
  std::printf("p value       %12.6f\n", report.p_value);
  std::printf("bootstrap     %d used, %d failed\n", report.m_bootstrap,
              report.failures);
  if (!common.out_path.empty()) {
    nlohmann::json config = common_config(common, true);
    config["B"] = B;
    config["M"] = M;
    write_report(common.out_path,
                 make_report("diagnose", config, to_json(report)));
  }
  return 0;
}

int cmd_simulate(const CommonOpts& common, const std::string& design, int n,
                 double sigma_u2, int n_replicates, int reps, std::size_t B,
                 std::size_t M, bool diagnostic, int workers) {
  StudyConfig cfg;
  cfg.design.design = design_from_string(design);
  cfg.design.n = n;
  cfg.design.sigma_u2 = sigma_u2;
  cfg.design.n_replicates = n_replicates;
  cfg.n_replicates_mc = reps;
  cfg.seed = require_seed(common);
  cfg.B = B;
  cfg.M = M;
  cfg.run_diagnostic = diagnostic;
  cfg.workers = workers;
  cfg.fit_options = fit_options(common);
  const auto summary = run_study(cfg);

  const auto print_summary = [](const char* name, const EstimatorSummary& s) {
    std::printf("%s (n_used %d)\n", name, s.n_used);
    std::printf("  %-12s %-10s %-10s %-10s %-10s\n", "param", "median", "iqr",
                "se_mean", "emp_sd");
    for (Eigen::Index i = 0; i < s.median.size(); ++i) {
      const std::string label =
          i + 1 < s.median.size() ? "beta_" + std::to_string(i) : "log_m";
      std::printf("  %-12s %-10.4f %-10.4f %-10.4f %-10.4f\n", label.c_str(),
                  s.median(i), s.iqr(i), s.se_mean(i), s.empirical_sd(i));
    }
  };
  if (summary.naive) print_summary("naive", *summary.naive);
  if (summary.mccl) print_summary("mccl", *summary.mccl);
  if (!summary.rejection_rates.empty()) {
    std::printf("rejection rates:");
    for (std::size_t i = 0; i < summary.rejection_rates.size(); ++i)
      std::printf("  %.2f:%.4f", summary.nominal_levels[i],
                  summary.rejection_rates[i]);
    std::printf("\n");
  }
  std::printf("replicates    %d (%d failed)\n", summary.n_replicates,
              summary.failures);

  if (!common.out_path.empty()) {
    nlohmann::json config = common_config(common, false);
    config["design"] = design;
    config["n"] = n;
    config["sigma_u2"] = sigma_u2;
    config["n_replicates"] = n_replicates;
    config["reps"] = reps;
    config["B"] = B;
    config["M"] = M;
    config["diagnostic"] = diagnostic;
    config["workers"] = workers;
    config["nominal_levels"] = cfg.nominal_levels;
    write_report(common.out_path,
                 make_report("simulate", config, to_json(summary)));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta modal regression with an error-prone covariate"};
  app.require_subcommand(1);

  CommonOpts fit_common, diag_common, sim_common;

  auto* fit = app.add_subcommand("fit", "Fit one model to a dataset");
  std::string method = "mccl", route = "loglik";
  std::size_t B = 100, simex_B = 300, n_boot = 0;
  double sigma_u2 = 0.0;
  std::vector<double> zeta_grid;
  add_common(fit, fit_common, true);
  fit->add_option("--method", method, "Estimator")
      ->check(CLI::IsMember({"naive", "mccl", "mccl-known-sigma", "simex"}))
      ->capture_default_str();
  fit->add_option("--route", route, "MCCL route")
      ->check(CLI::IsMember({"loglik", "score"}))
      ->capture_default_str();
  fit->add_option("--B", B, "Monte-Carlo size of the corrected objective")
      ->capture_default_str();
  fit->add_option("--sigma-u2", sigma_u2,
                  "Measurement error variance (known-sigma/simex)");
  fit->add_option("--simex-B", simex_B, "Naive refits per zeta level")
      ->capture_default_str();
  fit->add_option("--zeta-grid", zeta_grid,
                  "SIMEX zeta levels (default 0.125..1.0)");
  fit->add_option("--n-boot", n_boot, "SIMEX bootstrap SE resamples");

  auto* diag =
      app.add_subcommand("diagnose", "Score-based bootstrap diagnostic");
  std::size_t diag_B = 100, diag_M = 300;
  add_common(diag, diag_common, true);
  diag->add_option("--B", diag_B, "Monte-Carlo size of the corrected objective")
      ->capture_default_str();
  diag->add_option("--M", diag_M, "Bootstrap replicates")
      ->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo study");
  std::string design = "M1";
  int sim_n = 100, sim_nrep = 3, reps = 500, workers = 1;
  double sim_sigma_u2 = 0.6;
  std::size_t sim_B = 100, sim_M = 300;
  bool diagnostic = false;
  add_common(sim, sim_common, false);
  sim->add_option("--design", design, "Data generating design")
      ->check(CLI::IsMember({"M1", "M2", "M3", "M4", "M1-independent-x1",
                             "M1-laplace"}))
      ->capture_default_str();
  sim->add_option("--n", sim_n, "Subjects per replicate")
      ->capture_default_str();
  sim->add_option("--sigma-u2", sim_sigma_u2, "Measurement error variance")
      ->capture_default_str();
  sim->add_option("--n-replicates", sim_nrep, "Surrogate replicates")
      ->capture_default_str();
  sim->add_option("--reps", reps, "Monte-Carlo replicates")
      ->capture_default_str();
  sim->add_option("--B", sim_B, "Monte-Carlo size of the corrected objective")
      ->capture_default_str();
  sim->add_option("--M", sim_M, "Bootstrap replicates per diagnostic")
      ->capture_default_str();
  sim->add_flag("--diagnostic", diagnostic,
                "Run the bootstrap diagnostic per replicate");
  sim->add_option("--workers", workers, "Worker threads")
      ->envname("MODALME_WORKERS")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit->parsed())
      return cmd_fit(fit_common, method, route, B, sigma_u2, simex_B,
                     zeta_grid, n_boot);
    if (diag->parsed()) return cmd_diagnose(diag_common, diag_B, diag_M);
    return cmd_simulate(sim_common, design, sim_n, sim_sigma_u2, sim_nrep,
                        reps, sim_B, sim_M, diagnostic, workers);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
