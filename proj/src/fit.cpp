#include "modalme/fit.hpp"

#include <algorithm>
#include <cmath>

#include "modalme/rng.hpp"

namespace modalme {

namespace {

void check_design_rank(const Dataset& data) {
  const int p = 1 + static_cast<int>(data.front().x_rest.size());
  Eigen::MatrixXd design(data.size(), p + 1);
  for (std::size_t j = 0; j < data.size(); ++j) {
    design(j, 0) = 1.0;
    design.row(j).tail(p) = data[j].naive_x().transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1)
    throw RankError("design matrix (with surrogate means) is rank deficient");
}

OptimOptions optim_options(const FitOptions& opts) {
  OptimOptions o;
  o.method = opts.optimizer;
  o.tol = opts.tol;
  o.max_iter = opts.max_iter;
  o.throw_on_max_iter = opts.throw_on_max_iter;
  return o;
}

// Settings for the short gradient-based polish run after a simplex solve:
// stop only on a stalled objective or a ~1e-10 gradient, never throw.
OptimOptions polish_options() {
  OptimOptions o;
  o.method = OptimizerKind::bfgs;
  o.tol = 0.0;
  o.max_iter = 200;
  o.throw_on_max_iter = false;
  return o;
}

// A failed BFGS run is worth a simplex restart only when it stalled inside
// the sane region; trajectories that blew past the divergence bound stay
// failed.  Stalls at the edge of the non-finite region (where the gradient
// is no longer finite) are rescuable: the simplex handles them by treating
// non-finite values as +infinity.
bool rescuable(const OptimResult& res, const OptimOptions& o) {
  return !(o.diverge_norm > 0.0 && res.x.norm() > o.diverge_norm);
}

// The restart gets a bounded budget: genuine dead ends resolve in a few
// hundred simplex iterations, while pathological surfaces would otherwise
// consume the full outer budget.
OptimOptions restart_options(const OptimOptions& o) {
  OptimOptions so = o;
  so.method = OptimizerKind::nelder_mead;
  so.throw_on_max_iter = false;
  so.max_iter = std::min(so.max_iter, 1000);
  return so;
}

// Maximize the objective's value over (beta, log m).
OptimResult maximize_loglik(const CorrectedObjective& obj,
                            const ModelParams& init, const FitOptions& opts) {
  auto o = optim_options(opts);
  // Divergence floor for the minimized -loglik: a genuine log-likelihood is
  // bounded by roughly n * log(peak density), far inside this; values beyond
  // it only occur on the spurious near-pole spikes of the corrected
  // objective.
  o.f_floor = -(1e3 + 40.0 * obj.n_subjects());
  const auto neg_fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
    const double val = obj.value_and_gradient(ModelParams::from_vector(v), g);
    g = -g;
    return -val;
  };
  const auto neg_f = [&](const Eigen::VectorXd& v) {
    return -obj.value(ModelParams::from_vector(v));
  };
  // A convergence claim must be backed by a near-zero gradient: stalls at
  // the edge of the non-finite region can pass the objective-change test
  // with a gradient that is orders of magnitude away from stationarity.
  const auto gate = [&](OptimResult& r) {
    if (!r.converged) return;
    Eigen::VectorXd g(r.x.size());
    const double v = neg_fg(r.x, g);
    if (!g.allFinite() ||
        g.lpNorm<Eigen::Infinity>() > 1e-3 * (1.0 + std::abs(v)))
      r.converged = false;
  };
  OptimResult res;
  if (opts.optimizer == OptimizerKind::bfgs) {
    res = minimize_bfgs(neg_fg, init.as_vector(), o);
    gate(res);
    if (!res.converged && opts.simplex_rescue && rescuable(res, o)) {
      // Occasional line-search dead ends (mostly on resampled data) are
      // rescued by a bounded simplex restart from the best point found so
      // far, followed by the usual gradient polish.
      const OptimResult nm = minimize_simplex(neg_f, res.x, restart_options(o));
      const int iters = res.iterations + nm.iterations;
      const bool converged = nm.converged;
      auto po = polish_options();
      po.f_floor = o.f_floor;
      res = minimize_bfgs(neg_fg, nm.x, po);
      res.iterations += iters;
      res.converged = converged;
      gate(res);
    }
  } else {
    res = minimize_simplex(neg_f, init.as_vector(), o);
    // The simplex stops on objective change; a short gradient polish drives
    // the score norm to near machine level without changing the route.
    const int iters = res.iterations;
    const bool converged = res.converged;
    auto po = polish_options();
    po.f_floor = o.f_floor;
    res = minimize_bfgs(neg_fg, res.x, po);
    res.iterations += iters;
    res.converged = converged;
    gate(res);
  }
  res.f = -res.f;
  return res;
}

// Minimize the squared norm of the summed corrected scores.
OptimResult minimize_score_norm(const CorrectedObjective& obj,
                                const ModelParams& init,
                                const FitOptions& opts) {
  const auto o = optim_options(opts);
  auto score_sum = [&](const ModelParams& p) -> Eigen::VectorXd {
    return obj.scores(p).colwise().sum().transpose();
  };
  const auto quad_fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
    const auto p = ModelParams::from_vector(v);
    const Eigen::VectorXd s = score_sum(p);
    g = 2.0 * obj.score_jacobian_sum(p).transpose() * s;
    return s.squaredNorm();
  };
  const auto quad_f = [&](const Eigen::VectorXd& v) {
    return score_sum(ModelParams::from_vector(v)).squaredNorm();
  };
  if (opts.optimizer == OptimizerKind::bfgs) {
    OptimResult res = minimize_bfgs(quad_fg, init.as_vector(), o);
    if (!res.converged && opts.simplex_rescue && rescuable(res, o)) {
      const OptimResult nm = minimize_simplex(quad_f, res.x, restart_options(o));
      const int iters = res.iterations + nm.iterations;
      const bool converged = nm.converged;
      res = minimize_bfgs(quad_fg, nm.x, polish_options());
      res.iterations += iters;
      res.converged = converged;
    }
    return res;
  }
  OptimResult res = minimize_simplex(quad_f, init.as_vector(), o);
  const int iters = res.iterations;
  const bool converged = res.converged;
  res = minimize_bfgs(quad_fg, res.x, polish_options());
  res.iterations += iters;
  res.converged = converged;
  return res;
}

FitResult assemble(const CorrectedObjective& obj, const OptimResult& res,
                   FitMethod method, std::uint64_t seed,
                   const FitOptions& opts) {
  FitResult fit;
  fit.omega_hat = ModelParams::from_vector(res.x);
  fit.objective_value = res.f;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.method = method;
  fit.seed = seed;
  if (opts.compute_covariance && res.converged)
    fit.covariance = sandwich_from_objective(obj, fit.omega_hat);
  return fit;
}

}  // namespace

ModelParams default_init(const Dataset& data, LinkFunction link) {
  double ybar = 0.0;
  for (const auto& r : data) ybar += r.y;
  ybar /= static_cast<double>(data.size());
  ModelParams p;
  p.beta = Eigen::VectorXd::Zero(2 + data.front().x_rest.size());
  p.beta(0) = link_inverse(link.kind, std::clamp(ybar, 0.01, 0.99));
  p.log_m = 1.0;
  return p;
}

FitResult fit_naive(const Dataset& data, LinkFunction link,
                    const std::optional<ModelParams>& init,
                    const FitOptions& opts) {
  validate_dataset(data);
  check_design_rank(data);
  const auto obj = CorrectedObjective::naive(data, link);
  const ModelParams start = init ? *init : default_init(data, link);
  const auto res = maximize_loglik(obj, start, opts);
  return assemble(obj, res, FitMethod::naive, 0, opts);
}

FitResult fit_mccl(const Dataset& data, LinkFunction link, std::size_t B,
                   std::uint64_t seed, McclRoute route,
                   const std::optional<ModelParams>& init,
                   const FitOptions& opts) {
  validate_dataset(data);
  if (B < 1) throw ConfigError("fit_mccl needs B >= 1");
  std::vector<int> n_j;
  n_j.reserve(data.size());
  bool any_rep = false;
  for (const auto& r : data) {
    n_j.push_back(r.n_rep());
    any_rep = any_rep || r.n_rep() >= 2;
  }
  if (!any_rep)
    throw NoReplicatesError(
        "no subject has replicate surrogates; use the known-error-covariance "
        "variant instead");
  auto rng = make_rng(seed, streams::t_variates);
  const auto t = draw_t_variates(data.size(), n_j, B, rng);
  const auto obj = CorrectedObjective::replicate(data, link, t);

  std::optional<ModelParams> start = init;
  if (!start) {
    FitOptions naive_opts = opts;
    naive_opts.compute_covariance = false;
    start = fit_naive(data, link, {}, naive_opts).omega_hat;
  }
  const auto res = route == McclRoute::loglik
                       ? maximize_loglik(obj, *start, opts)
                       : minimize_score_norm(obj, *start, opts);
  return assemble(obj, res,
                  route == McclRoute::loglik ? FitMethod::mccl_loglik
                                             : FitMethod::mccl_score,
                  seed, opts);
}

FitResult fit_mccl_known_sigma(const Dataset& data, LinkFunction link,
                               const Eigen::MatrixXd& sigma_u, std::size_t B,
                               std::uint64_t seed,
                               const std::optional<ModelParams>& init,
                               const FitOptions& opts) {
  validate_dataset(data);
  if (B < 1) throw ConfigError("known-sigma fit needs B >= 1");
  auto rng = make_rng(seed, streams::known_sigma);
  const auto obj =
      CorrectedObjective::known_sigma(data, link, sigma_u, B, rng);
  std::optional<ModelParams> start = init;
  if (!start) {
    FitOptions naive_opts = opts;
    naive_opts.compute_covariance = false;
    start = fit_naive(data, link, {}, naive_opts).omega_hat;
  }
  const auto res = maximize_loglik(obj, *start, opts);
  return assemble(obj, res, FitMethod::mccl_known_sigma, seed, opts);
}

Eigen::MatrixXd sandwich_from_objective(const CorrectedObjective& obj,
                                        const ModelParams& omega_hat) {
  const double n = obj.n_subjects();
  const Eigen::MatrixXd A = obj.score_jacobian_sum(omega_hat) / n;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
    throw SingularityError("sandwich A matrix is numerically singular");
  const Eigen::MatrixXd rows = obj.scores(omega_hat);
  const Eigen::MatrixXd Bm = rows.transpose() * rows / n;
  const Eigen::MatrixXd Ainv =
      svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  Eigen::MatrixXd V = Ainv * Bm * Ainv.transpose() / n;
  return 0.5 * (V + V.transpose());
}

Eigen::MatrixXd sandwich_covariance(const Dataset& data, LinkFunction link,
                                    const ModelParams& omega_hat,
                                    const TVariateSet& t) {
  const auto obj = CorrectedObjective::replicate(data, link, t);
  return sandwich_from_objective(obj, omega_hat);
}

}  // namespace modalme
