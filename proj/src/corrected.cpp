#include "modalme/corrected.hpp"

#include <cmath>

#include "modalme/kernels.hpp"

namespace modalme {

namespace {

// Complex covariate vector (w-type value first) for the scalar path.
Eigen::VectorXcd complex_x(double re0, double im0,
                           const Eigen::VectorXd& x_rest) {
  Eigen::VectorXcd x(1 + x_rest.size());
  x(0) = cplx(re0, im0);
  for (int i = 0; i < x_rest.size(); ++i) x(i + 1) = x_rest(i);
  return x;
}

}  // namespace

double corrected_loglik(const ModelParams& params, LinkFunction link,
                        const SurrogateRecord& record,
                        const std::vector<double>& t_row) {
  const double c = record.imag_scale();
  if (c == 0.0)
    return log_likelihood(params, link, {record.y, record.naive_x()});
  if (t_row.empty())
    throw ConfigError("corrected_loglik needs T variates when s2 > 0");
  const double wb = record.w_bar();
  double acc = 0.0;
  for (double t : t_row) {
    const auto x = complex_x(wb, c * t, record.x_rest);
    acc += log_likelihood(params, link, record.y, x).real();
  }
  return acc / static_cast<double>(t_row.size());
}

Eigen::VectorXd corrected_score(const ModelParams& params, LinkFunction link,
                                const SurrogateRecord& record,
                                const std::vector<double>& t_row) {
  const double c = record.imag_scale();
  if (c == 0.0)
    return score(params, link, {record.y, record.naive_x()});
  if (t_row.empty())
    throw ConfigError("corrected_score needs T variates when s2 > 0");
  const double wb = record.w_bar();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.dim());
  for (double t : t_row) {
    const auto x = complex_x(wb, c * t, record.x_rest);
    const Eigen::VectorXcd psi = score(params, link, record.y, x);
    // Re Psi(.., w_bar + i c t, ..): the covariate entry multiplies the
    // complex abscissa, so take the real part of w * x1 directly.
    for (int i = 0; i < psi.size(); ++i) acc(i) += psi(i).real();
  }
  return acc / static_cast<double>(t_row.size());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols())
    throw MatrixError("covariance must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw MatrixError("covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * scale)
      throw MatrixError("covariance is not positive semidefinite");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double corrected_loglik_known_sigma(const ModelParams& params,
                                    LinkFunction link, double y,
                                    const Eigen::VectorXd& w,
                                    const Eigen::MatrixXd& sigma_u,
                                    const std::vector<Eigen::VectorXd>& z_row) {
  if (sigma_u.rows() != w.size())
    throw DimensionMismatch("error covariance does not match covariates");
  const Eigen::MatrixXd root = psd_sqrt(sigma_u);
  if (root.cwiseAbs().maxCoeff() == 0.0) {
    Observation obs{y, w};
    return log_likelihood(params, link, obs);
  }
  if (z_row.empty())
    throw ConfigError("corrected_loglik_known_sigma needs normal draws");
  Eigen::VectorXcd x(w.size());
  double acc = 0.0;
  for (const auto& z : z_row) {
    if (z.size() != w.size())
      throw DimensionMismatch("normal draw has wrong length");
    const Eigen::VectorXd d = root * z;
    for (int i = 0; i < w.size(); ++i) x(i) = cplx(w(i), d(i));
    acc += log_likelihood(params, link, y, x).real();
  }
  return acc / static_cast<double>(z_row.size());
}

// ---------------------------------------------------------------------------
// Batched whole-dataset evaluator.

namespace {
constexpr unsigned kLgamma = 1u;
constexpr unsigned kDigamma1 = 2u;
constexpr unsigned kDigamma2 = 4u;
constexpr unsigned kTrigamma = 8u;
constexpr unsigned kGp = 16u;
constexpr unsigned kGpp = 32u;
}  // namespace

struct CorrectedObjective::Workspace {
  std::vector<double> eta_re, eta_im, th_re, th_im, gp_re, gp_im, gpp_re,
      gpp_im;
  std::vector<double> a1r, a1i, a2r, a2i;
  std::vector<double> lg1r, lg1i, lg2r, lg2i;  // log-gamma values
  std::vector<double> p1r, p1i, p2r, p2i;      // digamma values
  std::vector<double> t1r, t1i, t2r, t2i;      // trigamma values
};

namespace {
void resize_all(std::vector<double>* first, int count, std::size_t n) {
  for (int i = 0; i < count; ++i) first[i].resize(n);
}
}  // namespace

CorrectedObjective::CorrectedObjective(const Dataset& data, LinkFunction link)
    : link_(link) {
  validate_dataset(data);
  p_ = 1 + static_cast<int>(data.front().x_rest.size());
  subjects_.reserve(data.size());
  for (const auto& r : data) {
    Subject s;
    s.y = r.y;
    s.L1 = std::log(r.y);
    s.L2 = std::log1p(-r.y);
    s.x = r.naive_x();
    subjects_.push_back(std::move(s));
  }
}

void CorrectedObjective::finalize() {
  for (auto& s : subjects_) {
    if (s.offset >= 0) continue;
    s.offset = n_points_;
    s.B = 1;
    dirs_.resize(dirs_.size() + static_cast<std::size_t>(p_), 0.0);
    ++n_points_;
  }
}

CorrectedObjective CorrectedObjective::naive(const Dataset& data,
                                             LinkFunction link) {
  CorrectedObjective obj(data, link);
  obj.finalize();
  return obj;
}

CorrectedObjective CorrectedObjective::replicate(const Dataset& data,
                                                 LinkFunction link,
                                                 const TVariateSet& t) {
  CorrectedObjective obj(data, link);
  if (t.t.size() != data.size())
    throw DimensionMismatch("T variate set does not match the dataset");
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double c = data[j].imag_scale();
    if (c == 0.0) continue;  // exact naive path, including s2 == 0
    const auto& row = t.t[j];
    if (row.empty())
      throw ConfigError("subject " + std::to_string(j) +
                        " has replicates but no T variates");
    auto& s = obj.subjects_[j];
    s.offset = obj.n_points_;
    s.B = static_cast<int>(row.size());
    obj.dirs_.resize(obj.dirs_.size() +
                     static_cast<std::size_t>(s.B) * obj.p_, 0.0);
    for (int b = 0; b < s.B; ++b)
      obj.dirs_[(s.offset + b) * static_cast<std::size_t>(obj.p_)] =
          c * row[b];
    obj.n_points_ += s.B;
  }
  obj.finalize();
  return obj;
}

CorrectedObjective CorrectedObjective::known_sigma(
    const Dataset& data, LinkFunction link, const Eigen::MatrixXd& sigma_u,
    std::size_t B, std::mt19937_64& rng) {
  CorrectedObjective obj(data, link);
  if (sigma_u.rows() != obj.p_)
    throw DimensionMismatch("error covariance does not match covariates");
  const Eigen::MatrixXd root = psd_sqrt(sigma_u);
  if (root.cwiseAbs().maxCoeff() == 0.0) {
    obj.finalize();  // exact naive reduction
    return obj;
  }
  if (B < 1) throw ConfigError("known-sigma correction needs B >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(obj.p_);
  for (auto& s : obj.subjects_) {
    s.offset = obj.n_points_;
    s.B = static_cast<int>(B);
    for (std::size_t b = 0; b < B; ++b) {
      for (int i = 0; i < obj.p_; ++i) z(i) = normal(rng);
      const Eigen::VectorXd d = root * z;
      for (int i = 0; i < obj.p_; ++i) obj.dirs_.push_back(d(i));
    }
    obj.n_points_ += static_cast<int>(B);
  }
  obj.finalize();
  return obj;
}

CorrectedObjective::Workspace& CorrectedObjective::prepare(
    const ModelParams& params, unsigned flags) const {
  if (params.beta.size() != p_ + 1)
    throw DimensionMismatch("parameter vector does not match the dataset");
  thread_local Workspace tl_ws;
  auto& ws = tl_ws;
  const auto n = static_cast<std::size_t>(n_points_);
  resize_all(&ws.eta_re, 4, n);
  resize_all(&ws.a1r, 4, n);
  if (flags & (kGp | kGpp)) resize_all(&ws.gp_re, 2, n);
  if (flags & kGpp) resize_all(&ws.gpp_re, 2, n);
  if (flags & kLgamma) resize_all(&ws.lg1r, 4, n);
  if (flags & (kDigamma1 | kDigamma2)) resize_all(&ws.p1r, 4, n);
  if (flags & kTrigamma) resize_all(&ws.t1r, 4, n);
  if (n == 0) return ws;

  for (const auto& s : subjects_) {
    if (s.offset < 0) continue;
    double base = params.beta(0);
    for (int i = 0; i < p_; ++i) base += params.beta(i + 1) * s.x(i);
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      double im = 0.0;
      const double* d = &dirs_[k * static_cast<std::size_t>(p_)];
      for (int i = 0; i < p_; ++i) im += params.beta(i + 1) * d[i];
      ws.eta_re[k] = base;
      ws.eta_im[k] = im;
    }
  }

  const bool want_gp = flags & (kGp | kGpp);
  const bool want_gpp = flags & kGpp;
  clink_batch(link_.kind, ws.eta_re.data(), ws.eta_im.data(), ws.th_re.data(),
              ws.th_im.data(), want_gp ? ws.gp_re.data() : nullptr,
              want_gp ? ws.gp_im.data() : nullptr,
              want_gpp ? ws.gpp_re.data() : nullptr,
              want_gpp ? ws.gpp_im.data() : nullptr, n);

  const double m = params.m();
  for (std::size_t k = 0; k < n; ++k) {
    ws.a1r[k] = 1.0 + m * ws.th_re[k];
    ws.a1i[k] = m * ws.th_im[k];
    ws.a2r[k] = 1.0 + m * (1.0 - ws.th_re[k]);
    ws.a2i[k] = -m * ws.th_im[k];
  }
  using namespace kernels;
  if (flags & kLgamma) {
    clgamma_batch(ws.a1r.data(), ws.a1i.data(), ws.lg1r.data(),
                  ws.lg1i.data(), n);
    clgamma_batch(ws.a2r.data(), ws.a2i.data(), ws.lg2r.data(),
                  ws.lg2i.data(), n);
  }
  if (flags & kDigamma1)
    cdigamma_batch(ws.a1r.data(), ws.a1i.data(), ws.p1r.data(), ws.p1i.data(),
                   n);
  if (flags & kDigamma2)
    cdigamma_batch(ws.a2r.data(), ws.a2i.data(), ws.p2r.data(), ws.p2i.data(),
                   n);
  if (flags & kTrigamma) {
    ctrigamma_batch(ws.a1r.data(), ws.a1i.data(), ws.t1r.data(),
                    ws.t1i.data(), n);
    ctrigamma_batch(ws.a2r.data(), ws.a2i.data(), ws.t2r.data(),
                    ws.t2i.data(), n);
  }
  return ws;
}

double CorrectedObjective::value(const ModelParams& params) const {
  const auto& ws = prepare(params, kLgamma);
  const double m = params.m();
  const double crm = rlog_gamma(2.0 + m);
  double total = 0.0;
  for (const auto& s : subjects_) {
    double acc = 0.0;
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      acc += crm - ws.lg1r[k] - ws.lg2r[k] +
             m * (ws.th_re[k] * s.L1 + (1.0 - ws.th_re[k]) * s.L2);
    }
    total += acc / s.B;
  }
  return total;
}

double CorrectedObjective::value_and_gradient(const ModelParams& params,
                                              Eigen::VectorXd& grad) const {
  const auto& ws = prepare(params, kLgamma | kDigamma1 | kDigamma2 | kGp);
  const double m = params.m();
  const double crm = rlog_gamma(2.0 + m);
  const double cpsi = rdigamma(2.0 + m);
  grad = Eigen::VectorXd::Zero(n_params());
  Eigen::VectorXd row(n_params());
  double total = 0.0;
  for (const auto& s : subjects_) {
    row.setZero();
    double acc = 0.0;
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      const double tr = ws.th_re[k], ti = ws.th_im[k];
      acc += crm - ws.lg1r[k] - ws.lg2r[k] + m * (tr * s.L1 + (1.0 - tr) * s.L2);
      const double ur = m * (-ws.p1r[k] + ws.p2r[k] + s.L1 - s.L2);
      const double ui = m * (-ws.p1i[k] + ws.p2i[k]);
      const double wr = ur * ws.gp_re[k] - ui * ws.gp_im[k];
      const double wi = ur * ws.gp_im[k] + ui * ws.gp_re[k];
      const double* d = &dirs_[k * static_cast<std::size_t>(p_)];
      row(0) += wr;
      for (int i = 0; i < p_; ++i) row(i + 1) += wr * s.x(i) - wi * d[i];
      const double gmr = cpsi - (tr * ws.p1r[k] - ti * ws.p1i[k]) -
                         ((1.0 - tr) * ws.p2r[k] + ti * ws.p2i[k]) +
                         tr * s.L1 + (1.0 - tr) * s.L2;
      row(p_ + 1) += m * gmr;
    }
    total += acc / s.B;
    grad += row / s.B;
  }
  return total;
}

Eigen::VectorXd CorrectedObjective::gradient(const ModelParams& params) const {
  Eigen::VectorXd g;
  value_and_gradient(params, g);
  return g;
}

Eigen::MatrixXd CorrectedObjective::scores(const ModelParams& params) const {
  const auto& ws = prepare(params, kDigamma1 | kDigamma2 | kGp);
  const double m = params.m();
  const double cpsi = rdigamma(2.0 + m);
  Eigen::MatrixXd out(n_subjects(), n_params());
  Eigen::VectorXd row(n_params());
  for (int j = 0; j < n_subjects(); ++j) {
    const auto& s = subjects_[j];
    row.setZero();
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      const double tr = ws.th_re[k], ti = ws.th_im[k];
      const double ur = m * (-ws.p1r[k] + ws.p2r[k] + s.L1 - s.L2);
      const double ui = m * (-ws.p1i[k] + ws.p2i[k]);
      const double wr = ur * ws.gp_re[k] - ui * ws.gp_im[k];
      const double wi = ur * ws.gp_im[k] + ui * ws.gp_re[k];
      const double* d = &dirs_[k * static_cast<std::size_t>(p_)];
      row(0) += wr;
      for (int i = 0; i < p_; ++i) row(i + 1) += wr * s.x(i) - wi * d[i];
      const double gmr = cpsi - (tr * ws.p1r[k] - ti * ws.p1i[k]) -
                         ((1.0 - tr) * ws.p2r[k] + ti * ws.p2i[k]) +
                         tr * s.L1 + (1.0 - tr) * s.L2;
      row(p_ + 1) += m * gmr;
    }
    out.row(j) = row.transpose() / s.B;
  }
  return out;
}

Eigen::MatrixXd CorrectedObjective::score_jacobian_sum(
    const ModelParams& params) const {
  const auto& ws =
      prepare(params, kDigamma1 | kDigamma2 | kTrigamma | kGp | kGpp);
  const double m = params.m();
  const double cpsi = rdigamma(2.0 + m);
  const double ctri = rtrigamma(2.0 + m);
  const int pb = p_ + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_params(), n_params());
  Eigen::MatrixXd Jsub(n_params(), n_params());
  Eigen::VectorXcd xt(pb);
  for (const auto& s : subjects_) {
    Jsub.setZero();
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      const cplx th(ws.th_re[k], ws.th_im[k]);
      const cplx psi1(ws.p1r[k], ws.p1i[k]), psi2(ws.p2r[k], ws.p2i[k]);
      const cplx tri1(ws.t1r[k], ws.t1i[k]), tri2(ws.t2r[k], ws.t2i[k]);
      const cplx gp(ws.gp_re[k], ws.gp_im[k]);
      const cplx gpp(ws.gpp_re[k], ws.gpp_im[k]);
      const cplx u = m * (-psi1 + psi2 + s.L1 - s.L2);
      const cplx cbb = -m * m * (tri1 + tri2) * gp * gp + u * gpp;
      const cplx dmix =
          (u / m + m * (-th * tri1 + (1.0 - th) * tri2)) * gp;
      const cplx gm = cpsi - th * psi1 - (1.0 - th) * psi2 + th * s.L1 +
                      (1.0 - th) * s.L2;
      const cplx dgm_dm =
          ctri - th * th * tri1 - (1.0 - th) * (1.0 - th) * tri2;
      const double* d = &dirs_[k * static_cast<std::size_t>(p_)];
      xt(0) = 1.0;
      for (int i = 0; i < p_; ++i) xt(i + 1) = cplx(s.x(i), d[i]);
      for (int i = 0; i < pb; ++i) {
        for (int l = i; l < pb; ++l) {
          const double v = (cbb * xt(i) * xt(l)).real();
          Jsub(i, l) += v;
          if (l != i) Jsub(l, i) += v;
        }
        const double v = (m * dmix * xt(i)).real();
        Jsub(i, pb) += v;
        Jsub(pb, i) += v;
      }
      Jsub(pb, pb) += (m * m * dgm_dm + m * gm).real();
    }
    J += Jsub / s.B;
  }
  return J;
}

Eigen::MatrixXd CorrectedObjective::diag_scores(
    const ModelParams& params) const {
  const auto& ws = prepare(params, kDigamma1);
  const double m = params.m();
  const double cpsi2 = rdigamma(2.0 + m);
  const double cpsi3 = rdigamma(3.0 + m);
  Eigen::MatrixXd out(n_subjects(), 2);
  for (int j = 0; j < n_subjects(); ++j) {
    const auto& s = subjects_[j];
    double s1 = 0.0, s2 = 0.0;
    for (int b = 0; b < s.B; ++b) {
      const std::size_t k = static_cast<std::size_t>(s.offset + b);
      const cplx a1(ws.a1r[k], ws.a1i[k]);
      const cplx psi1(ws.p1r[k], ws.p1i[k]);
      s1 += s.L1 - ws.p1r[k] + cpsi2;
      // psi(a1 + 1) = psi(a1) + 1/a1, so no second digamma batch is needed.
      const cplx q = psi1 + 1.0 / a1 - cpsi3;
      s2 += s.y * s.L1 - (a1 * q).real() / (2.0 + m);
    }
    out(j, 0) = s1 / s.B;
    out(j, 1) = s2 / s.B;
  }
  return out;
}

}  // namespace modalme
