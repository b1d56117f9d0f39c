#include "modalme/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace modalme {

namespace {

double guarded(const ObjectiveFn& f, const Eigen::VectorXd& x,
               const OptimOptions& opts) {
  const double v = f(x);
  if (!std::isfinite(v) || v < opts.f_floor)
    return std::numeric_limits<double>::infinity();
  return v;
}

OptimResult unconverged(Eigen::VectorXd x, double f, int iters,
                        const OptimOptions& opts,
                        const std::string& reason) {
  if (opts.throw_on_max_iter) throw ConvergenceError("optimizer " + reason);
  return {std::move(x), f, false, iters};
}

bool diverged(const Eigen::VectorXd& x, const OptimOptions& opts) {
  return opts.diverge_norm > 0.0 && x.norm() > opts.diverge_norm;
}

}  // namespace

OptimResult minimize_simplex(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const OptimOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ConfigError("empty parameter vector");

  // Initial simplex: relative 5% steps, absolute 2.5e-4 for zero entries.
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  for (int i = 0; i < n; ++i) {
    if (x0(i) != 0.0)
      pts[i + 1](i) *= 1.05;
    else
      pts[i + 1](i) = 0.00025;
  }
  std::vector<double> fv(n + 1);
  for (int i = 0; i <= n; ++i) fv[i] = guarded(f, pts[i], opts);

  std::vector<int> order(n + 1);
  Eigen::VectorXd centroid(n), xr(n), xe(n), xc(n);
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    if (std::isfinite(fv[worst]) &&
        fv[worst] - fv[best] <= opts.tol * (1.0 + std::abs(fv[best])))
      return {pts[best], fv[best], true, iter};
    // A collapsed simplex is converged even when a vertex keeps landing in a
    // non-finite region (optimum at the edge of the feasible set): the value
    // spread test above can then never fire.
    double diam = 0.0;
    for (int i = 0; i <= n; ++i)
      diam = std::max(diam, (pts[i] - pts[best]).norm());
    if (std::isfinite(fv[best]) &&
        diam <= opts.tol * (1.0 + pts[best].norm()))
      return {pts[best], fv[best], true, iter};
    if (diverged(pts[best], opts))
      return unconverged(pts[best], fv[best], iter, opts,
                         "iterates diverged beyond the parameter norm bound");

    centroid.setZero();
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= n;

    xr = centroid + (centroid - pts[worst]);  // reflection
    const double fr = guarded(f, xr, opts);
    if (fr < fv[best]) {
      xe = centroid + 2.0 * (centroid - pts[worst]);  // expansion
      const double fe = guarded(f, xe, opts);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    if (fr < fv[worst]) {  // outside contraction
      xc = centroid + 0.5 * (xr - centroid);
      const double fc = guarded(f, xc, opts);
      if (fc <= fr) {
        pts[worst] = xc;
        fv[worst] = fc;
        continue;
      }
    } else {  // inside contraction
      xc = centroid - 0.5 * (centroid - pts[worst]);
      const double fc = guarded(f, xc, opts);
      if (fc < fv[worst]) {
        pts[worst] = xc;
        fv[worst] = fc;
        continue;
      }
    }
    // Shrink toward the best vertex.
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      fv[i] = guarded(f, pts[i], opts);
    }
  }
  const int best =
      static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return unconverged(pts[best], fv[best], iter, opts,
                     "hit the iteration limit (" +
                         std::to_string(opts.max_iter) + ")");
}

OptimResult minimize_bfgs(const GradObjectiveFn& fg, const Eigen::VectorXd& x0,
                          const OptimOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ConfigError("empty parameter vector");

  Eigen::VectorXd x = x0, g(n), x_new(n), g_new(n);
  double fx = fg(x, g);
  if (!std::isfinite(fx))
    throw DomainError("objective not finite at the starting point");
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-10)
      return {x, fx, true, iter};
    Eigen::VectorXd d = -H * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // safeguard against a spoiled H
      H.setIdentity();
      d = -g;
      slope = g.dot(d);
    }
    const double dn = d.norm();
    if (opts.max_step > 0.0 && dn > opts.max_step) {
      d *= opts.max_step / dn;
      slope = g.dot(d);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      // Require a finite gradient too: an improving step onto the edge of
      // the non-finite region would strand the next iteration there.
      if (std::isfinite(f_new) && f_new >= opts.f_floor &&
          g_new.allFinite() && f_new <= fx + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) {
      // No descent along d at machine-reachable steps: treat as converged
      // if the gradient is small, otherwise report failure.
      if (g.norm() < 1e-6 * (1.0 + std::abs(fx))) return {x, fx, true, iter};
      return unconverged(x, fx, iter, opts, "line search found no descent");
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const bool done =
        std::abs(fx - f_new) <= opts.tol * (1.0 + std::abs(f_new));
    x = x_new;
    fx = f_new;
    g = g_new;
    if (done) return {x, fx, true, iter + 1};
    if (diverged(x, opts))
      return unconverged(x, fx, iter + 1, opts,
                         "iterates diverged beyond the parameter norm bound");

    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * yv.transpose()) * H *
              (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }
  }
  return unconverged(x, fx, opts.max_iter, opts,
                     "hit the iteration limit (" +
                         std::to_string(opts.max_iter) + ")");
}

}  // namespace modalme
