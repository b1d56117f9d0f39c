#include "modalme/model.hpp"

#include <cmath>

namespace modalme {

namespace {

// Gamma-family helpers resolved per scalar type.
inline double lg(double z) { return rlog_gamma(z); }
inline cplx lg(cplx z) { return clog_gamma(z); }
inline double psi(double z) { return rdigamma(z); }
inline cplx psi(cplx z) { return cdigamma(z); }
inline double psi1(double z) { return rtrigamma(z); }
inline cplx psi1(cplx z) { return ctrigamma(z); }

template <typename Vec>
auto linear_predictor(const ModelParams& params, const Vec& x) {
  if (x.size() + 1 != params.beta.size())
    throw DimensionMismatch("covariate vector has length " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(params.beta.size() - 1));
  typename Vec::Scalar eta = params.beta(0);
  for (int i = 0; i < x.size(); ++i) eta += params.beta(i + 1) * x(i);
  return eta;
}

void check_real_obs(const Observation& obs, double m) {
  if (!(obs.y > 0.0 && obs.y < 1.0))
    throw DomainError("response must lie strictly inside (0,1)");
  if (!(m > 0.0) || !std::isfinite(m))
    throw DomainError("precision m must be positive and finite");
}

template <typename T>
struct Pieces {
  T theta, a1, a2, eta;
  double m, L1, L2;
};

template <typename T, typename Vec>
Pieces<T> pieces(const ModelParams& params, LinkFunction link, double y,
                 const Vec& x) {
  Pieces<T> p;
  p.m = params.m();
  p.eta = linear_predictor(params, x);
  p.theta = link_value(link.kind, p.eta);
  p.a1 = 1.0 + p.m * p.theta;
  p.a2 = 1.0 + p.m * (1.0 - p.theta);
  p.L1 = std::log(y);
  p.L2 = std::log1p(-y);
  return p;
}

template <typename T>
T loglik_from_pieces(const Pieces<T>& p) {
  return rlog_gamma(2.0 + p.m) - lg(p.a1) - lg(p.a2) +
         p.m * p.theta * p.L1 + p.m * (1.0 - p.theta) * p.L2;
}

// Stacked (d/d beta, d/d log m or d/d m) score.
template <typename T, typename Vec, typename Out>
void score_from_pieces(const Pieces<T>& p, const ModelParams& params,
                       LinkFunction link, const Vec& x, bool log_scale,
                       Out& out) {
  const T u = p.m * (-psi(p.a1) + psi(p.a2) + p.L1 - p.L2);
  const T gp = link_deriv(link.kind, p.eta);
  const T w = u * gp;
  out(0) = w;
  for (int i = 0; i < x.size(); ++i) out(i + 1) = w * x(i);
  T gm = rdigamma(2.0 + p.m) - p.theta * psi(p.a1) -
         (1.0 - p.theta) * psi(p.a2) + p.theta * p.L1 +
         (1.0 - p.theta) * p.L2;
  out(params.beta.size()) = log_scale ? T(p.m * gm) : gm;
}

template <typename T, typename Vec, typename Mat>
void jacobian_from_pieces(const Pieces<T>& p, const ModelParams& params,
                          LinkFunction link, const Vec& x, Mat& J) {
  const int pb = static_cast<int>(params.beta.size());
  const T gp = link_deriv(link.kind, p.eta);
  const T gpp = link_deriv2(link.kind, p.eta);
  const T psi_a1 = psi(p.a1), psi_a2 = psi(p.a2);
  const T tri_a1 = psi1(p.a1), tri_a2 = psi1(p.a2);
  const double m = p.m;
  const T u = m * (-psi_a1 + psi_a2 + p.L1 - p.L2);
  const T du_dtheta = -m * m * (tri_a1 + tri_a2);
  const T cbb = du_dtheta * gp * gp + u * gpp;
  // mixed beta / m piece: d u/d m * g' (equals m * d gm/d theta * g' / m)
  const T dmix = (u / m + m * (-p.theta * tri_a1 + (1.0 - p.theta) * tri_a2)) * gp;
  const T gm = rdigamma(2.0 + m) - p.theta * psi_a1 -
               (1.0 - p.theta) * psi_a2 + p.theta * p.L1 +
               (1.0 - p.theta) * p.L2;
  const T dgm_dm = rtrigamma(2.0 + m) - p.theta * p.theta * tri_a1 -
                   (1.0 - p.theta) * (1.0 - p.theta) * tri_a2;
  auto xt = [&](int i) -> T {
    return i == 0 ? T(1.0) : T(x(i - 1));
  };
  for (int i = 0; i < pb; ++i)
    for (int j = 0; j < pb; ++j) J(i, j) = cbb * xt(i) * xt(j);
  for (int i = 0; i < pb; ++i) {
    J(i, pb) = m * dmix * xt(i);
    J(pb, i) = J(i, pb);
  }
  J(pb, pb) = m * m * dgm_dm + m * gm;
}

template <typename T>
void diag_from_pieces(const Pieces<T>& p, double y, T& s1, T& s2) {
  const double m = p.m;
  s1 = p.L1 - psi(p.a1) + rdigamma(2.0 + m);
  s2 = y * p.L1 - p.a1 * (psi(p.a1 + 1.0) - rdigamma(3.0 + m)) / (2.0 + m);
}

}  // namespace

double mode_theta(const ModelParams& params, LinkFunction link,
                  const Eigen::VectorXd& x) {
  return link_value(link.kind, linear_predictor(params, x));
}

cplx mode_theta(const ModelParams& params, LinkFunction link,
                const Eigen::VectorXcd& x) {
  return link_value(link.kind, linear_predictor(params, x));
}

std::pair<double, double> beta_shape(double theta, double m) {
  if (!(theta > 0.0 && theta < 1.0))
    throw DomainError("mode theta must lie in (0,1)");
  if (!(m > 0.0)) throw DomainError("precision m must be positive");
  return {1.0 + m * theta, 1.0 + m * (1.0 - theta)};
}

std::pair<cplx, cplx> beta_shape(cplx theta, double m) {
  if (!(m > 0.0)) throw DomainError("precision m must be positive");
  return {1.0 + m * theta, 1.0 + m * (1.0 - theta)};
}

double log_likelihood(const ModelParams& params, LinkFunction link,
                      const Observation& obs) {
  check_real_obs(obs, params.m());
  return loglik_from_pieces(pieces<double>(params, link, obs.y, obs.x));
}

cplx log_likelihood(const ModelParams& params, LinkFunction link, double y,
                    const Eigen::VectorXcd& x) {
  if (!(y > 0.0 && y < 1.0))
    throw DomainError("response must lie strictly inside (0,1)");
  return loglik_from_pieces(pieces<cplx>(params, link, y, x));
}

Eigen::VectorXd score(const ModelParams& params, LinkFunction link,
                      const Observation& obs, bool log_scale) {
  check_real_obs(obs, params.m());
  const auto p = pieces<double>(params, link, obs.y, obs.x);
  Eigen::VectorXd out(params.dim());
  score_from_pieces(p, params, link, obs.x, log_scale, out);
  return out;
}

Eigen::VectorXcd score(const ModelParams& params, LinkFunction link, double y,
                       const Eigen::VectorXcd& x, bool log_scale) {
  const auto p = pieces<cplx>(params, link, y, x);
  Eigen::VectorXcd out(params.dim());
  score_from_pieces(p, params, link, x, log_scale, out);
  return out;
}

Eigen::MatrixXd score_jacobian(const ModelParams& params, LinkFunction link,
                               const Observation& obs) {
  check_real_obs(obs, params.m());
  const auto p = pieces<double>(params, link, obs.y, obs.x);
  Eigen::MatrixXd J(params.dim(), params.dim());
  jacobian_from_pieces(p, params, link, obs.x, J);
  return J;
}

Eigen::MatrixXcd score_jacobian(const ModelParams& params, LinkFunction link,
                                double y, const Eigen::VectorXcd& x) {
  const auto p = pieces<cplx>(params, link, y, x);
  Eigen::MatrixXcd J(params.dim(), params.dim());
  jacobian_from_pieces(p, params, link, x, J);
  return J;
}

Eigen::Vector2d diag_score_S(const ModelParams& params, LinkFunction link,
                             const Observation& obs) {
  check_real_obs(obs, params.m());
  const auto p = pieces<double>(params, link, obs.y, obs.x);
  double s1, s2;
  diag_from_pieces(p, obs.y, s1, s2);
  return {s1, s2};
}

Eigen::Vector2cd diag_score_S(const ModelParams& params, LinkFunction link,
                              double y, const Eigen::VectorXcd& x) {
  const auto p = pieces<cplx>(params, link, y, x);
  cplx s1, s2;
  diag_from_pieces(p, y, s1, s2);
  Eigen::Vector2cd out;
  out << s1, s2;
  return out;
}

double sample_response(double theta, double m, std::mt19937_64& rng) {
  const auto [a1, a2] = beta_shape(theta, m);
  std::gamma_distribution<double> g1(a1, 1.0), g2(a2, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double v1 = g1(rng), v2 = g2(rng);
    const double y = v1 / (v1 + v2);
    if (y > 0.0 && y < 1.0) return y;
  }
  throw DomainError("beta sampler failed to produce an interior draw");
}

}  // namespace modalme
