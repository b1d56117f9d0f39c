#include "modalme/sim_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "modalme/rng.hpp"

namespace modalme {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kBoundaryNudge = 1e-6;

const LinkFunction kLogit{LinkKind::logit};

bool is_m1_family(Design d) {
  return d == Design::M1 || d == Design::M1_independent_x1 ||
         d == Design::M1_laplace;
}

void validate_config(const DesignConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("design needs n >= 1");
  if (cfg.design == Design::M4 && cfg.n < 2)
    throw ConfigError("(M4) min-max rescaling needs n >= 2");
  if (!(cfg.sigma_u2 >= 0.0) || !std::isfinite(cfg.sigma_u2))
    throw ConfigError("sigma_u2 must be a finite non-negative real");
  if (cfg.n_replicates < 1) throw ConfigError("need n_replicates >= 1");
  if (cfg.m_true < 0.0 || !std::isfinite(cfg.m_true))
    throw ConfigError("m_true must be positive (or 0 for the default)");
  const int expect = cfg.design == Design::M2 ? 4 : 3;
  if (cfg.beta_true.size() != 0 && cfg.beta_true.size() != expect)
    throw ConfigError("beta_true has the wrong length for this design");
}

double laplace_draw(double scale, std::mt19937_64& rng) {
  // Difference of two unit exponentials is Laplace(0, 1).
  std::exponential_distribution<double> expo(1.0);
  return scale * (expo(rng) - expo(rng));
}

}  // namespace

Design design_from_string(const std::string& name) {
  if (name == "M1") return Design::M1;
  if (name == "M2") return Design::M2;
  if (name == "M3") return Design::M3;
  if (name == "M4") return Design::M4;
  if (name == "M1-independent-x1" || name == "M1_independent_x1")
    return Design::M1_independent_x1;
  if (name == "M1-laplace" || name == "M1_laplace") return Design::M1_laplace;
  throw ConfigError("unknown design: " + name);
}

std::string design_to_string(Design d) {
  switch (d) {
    case Design::M1: return "M1";
    case Design::M2: return "M2";
    case Design::M3: return "M3";
    case Design::M4: return "M4";
    case Design::M1_independent_x1: return "M1-independent-x1";
    case Design::M1_laplace: return "M1-laplace";
  }
  throw ConfigError("unknown design enum value");
}

Eigen::VectorXd design_default_beta(Design d) {
  if (is_m1_family(d)) {
    Eigen::VectorXd b(3);
    b << 0.25, 0.25, 0.25;
    return b;
  }
  Eigen::VectorXd b(d == Design::M2 ? 4 : 3);
  b.setOnes();
  return b;
}

double design_default_m(Design d) { return d == Design::M2 ? 40.0 : 3.0; }

GeneratedData generate_design(const DesignConfig& cfg, std::mt19937_64& rng) {
  validate_config(cfg);
  const Eigen::VectorXd beta =
      cfg.beta_true.size() ? cfg.beta_true : design_default_beta(cfg.design);
  const double m = cfg.m_true > 0.0 ? cfg.m_true : design_default_m(cfg.design);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution bern(0.5);
  const double su = std::sqrt(cfg.sigma_u2);
  const double laplace_scale = std::sqrt(0.5);

  GeneratedData out;
  out.data.reserve(cfg.n);
  out.x1_true.resize(cfg.n);
  for (int j = 0; j < cfg.n; ++j) {
    const double x2 = bern(rng) ? 1.0 : 0.0;
    const double x1 = cfg.design == Design::M1_independent_x1
                          ? normal(rng)
                          : (2.0 * x2 - 1.0) + normal(rng);
    out.x1_true(j) = x1;

    double eta = beta(0) + beta(1) * x1 + beta(2) * x2;
    if (cfg.design == Design::M2) eta += beta(3) * x1 * x1;
    const double theta = link_value(
        cfg.design == Design::M3 ? LinkKind::probit : LinkKind::logit, eta);

    SurrogateRecord r;
    if (cfg.design == Design::M4) {
      // Gumbel(theta, |1 - 2 theta| / {gamma (2 + m)}); the absolute value
      // keeps the scale positive when the covariates push theta past 1/2.
      const double scale =
          std::abs(1.0 - 2.0 * theta) / (kEulerGamma * (2.0 + m));
      std::extreme_value_distribution<double> gumbel(theta, scale);
      r.y = gumbel(rng);  // rescaled to (0,1) after the loop
    } else {
      r.y = sample_response(theta, m, rng);
    }
    r.x_rest = Eigen::VectorXd::Constant(1, x2);
    r.w.reserve(cfg.n_replicates);
    for (int k = 0; k < cfg.n_replicates; ++k) {
      const double u = cfg.design == Design::M1_laplace
                           ? laplace_draw(laplace_scale, rng)
                           : su * normal(rng);
      r.w.push_back(x1 + u);
    }
    out.data.push_back(std::move(r));
  }

  if (cfg.design == Design::M4) {
    double lo = out.data[0].y, hi = out.data[0].y;
    for (const auto& r : out.data) {
      lo = std::min(lo, r.y);
      hi = std::max(hi, r.y);
    }
    if (!(hi > lo))
      throw DegenerateError("(M4) responses are all equal; cannot rescale");
    for (auto& r : out.data) {
      const double y = (r.y - lo) / (hi - lo);
      // Min-max scaling pins the two extreme subjects to {0, 1}, which the
      // beta likelihood cannot evaluate; nudge them just inside.
      r.y = std::clamp(y, kBoundaryNudge, 1.0 - kBoundaryNudge);
    }
  }
  return out;
}

namespace {

double quantile(std::vector<double> v, double p) {
  // Linear interpolation between order statistics (the common "type 7").
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

struct ReplicateResult {
  bool ok = false;
  Eigen::VectorXd naive_est, naive_se;
  Eigen::VectorXd mccl_est, mccl_se;
  double p_value = -1.0;  // < 0: diagnostic not run
};

EstimatorSummary summarize(const std::vector<const Eigen::VectorXd*>& est,
                           const std::vector<const Eigen::VectorXd*>& se) {
  EstimatorSummary s;
  const int dim = static_cast<int>(est.front()->size());
  const double k = static_cast<double>(est.size());
  s.median.resize(dim);
  s.iqr.resize(dim);
  s.se_mean = Eigen::VectorXd::Zero(dim);
  s.empirical_sd.resize(dim);
  std::vector<double> col(est.size());
  for (int c = 0; c < dim; ++c) {
    for (std::size_t r = 0; r < est.size(); ++r) col[r] = (*est[r])(c);
    s.median(c) = quantile(col, 0.5);
    s.iqr(c) = quantile(col, 0.75) - quantile(col, 0.25);
    const double mean =
        std::accumulate(col.begin(), col.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    s.empirical_sd(c) = k > 1.0 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    for (const auto* v : se) s.se_mean(c) += (*v)(c);
    s.se_mean(c) /= k;
  }
  s.n_used = static_cast<int>(est.size());
  return s;
}

}  // namespace

StudySummary run_study(const StudyConfig& cfg) {
  if (cfg.n_replicates_mc < 1)
    throw ConfigError("run_study needs n_replicates_mc >= 1");
  validate_config(cfg.design);
  if (!cfg.fit_naive && !cfg.fit_mccl && !cfg.run_diagnostic)
    throw ConfigError("run_study: nothing requested");

  const int reps = cfg.n_replicates_mc;
  std::vector<ReplicateResult> results(reps);

  const auto run_one = [&](int r) {
    ReplicateResult& out = results[r];
    const std::uint64_t rep_seed =
        derive_seed(cfg.seed, streams::study, static_cast<std::uint64_t>(r));
    try {
      auto rng = make_rng(cfg.seed, streams::study,
                          static_cast<std::uint64_t>(r));
      const auto gen = generate_design(cfg.design, rng);

      std::optional<ModelParams> warm;
      if (cfg.fit_naive || cfg.fit_mccl) {
        FitOptions naive_opts = cfg.fit_options;
        naive_opts.compute_covariance = cfg.fit_naive;
        const auto naive = fit_naive(gen.data, kLogit, {}, naive_opts);
        if (!naive.converged) return;
        warm = naive.omega_hat;
        if (cfg.fit_naive) {
          out.naive_est = naive.omega_hat.as_vector();
          out.naive_se = naive.se();
        }
      }
      if (cfg.fit_mccl) {
        const auto mccl = fit_mccl(gen.data, kLogit, cfg.B, rep_seed,
                                   McclRoute::loglik, warm, cfg.fit_options);
        if (!mccl.converged) return;
        out.mccl_est = mccl.omega_hat.as_vector();
        out.mccl_se = mccl.se();
      }
      if (cfg.run_diagnostic) {
        const auto rep = bootstrap_pvalue(gen.data, kLogit, cfg.B, cfg.M,
                                          rep_seed, cfg.fit_options);
        out.p_value = rep.p_value;
      }
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;  // dropped and counted below
    }
  };

  const int workers = std::max(1, std::min<int>(cfg.workers, reps));
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1))
          run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  StudySummary summary;
  summary.n_replicates = reps;
  summary.nominal_levels = cfg.nominal_levels;
  std::vector<const Eigen::VectorXd*> naive_est, naive_se, mccl_est, mccl_se;
  std::vector<double> pvals;
  for (const auto& res : results) {
    if (!res.ok) {
      ++summary.failures;
      continue;
    }
    if (cfg.fit_naive) {
      naive_est.push_back(&res.naive_est);
      naive_se.push_back(&res.naive_se);
    }
    if (cfg.fit_mccl) {
      mccl_est.push_back(&res.mccl_est);
      mccl_se.push_back(&res.mccl_se);
    }
    if (cfg.run_diagnostic) pvals.push_back(res.p_value);
  }
  if (summary.failures * 10 > reps)
    throw ConvergenceError("more than 10% of study replicates failed (" +
                           std::to_string(summary.failures) + "/" +
                           std::to_string(reps) + ")");
  if (cfg.fit_naive && !naive_est.empty())
    summary.naive = summarize(naive_est, naive_se);
  if (cfg.fit_mccl && !mccl_est.empty())
    summary.mccl = summarize(mccl_est, mccl_se);
  if (cfg.run_diagnostic) {
    summary.rejection_rates.reserve(cfg.nominal_levels.size());
    for (double level : cfg.nominal_levels) {
      std::size_t reject = 0;
      for (double p : pvals)
        if (p <= level) ++reject;
      summary.rejection_rates.push_back(
          pvals.empty() ? 0.0
                        : static_cast<double>(reject) /
                              static_cast<double>(pvals.size()));
    }
  }
  return summary;
}

}  // namespace modalme
