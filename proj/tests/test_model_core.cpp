#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "modalme/model.hpp"

using namespace modalme;

namespace {

ModelParams make_params(std::initializer_list<double> beta, double log_m) {
  ModelParams p;
  p.beta = Eigen::VectorXd(static_cast<int>(beta.size()));
  int i = 0;
  for (double b : beta) p.beta(i++) = b;
  p.log_m = log_m;
  return p;
}

// Independent beta pdf, straight from the textbook formula.
double beta_log_pdf(double y, double a1, double a2) {
  return std::lgamma(a1 + a2) - std::lgamma(a1) - std::lgamma(a2) +
         (a1 - 1.0) * std::log(y) + (a2 - 1.0) * std::log(1.0 - y);
}

ModelParams random_params(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> db(-1.0, 1.0), dm(-0.5, 3.0);
  ModelParams pr;
  pr.beta = Eigen::VectorXd(p + 1);
  for (int i = 0; i <= p; ++i) pr.beta(i) = db(rng);
  pr.log_m = dm(rng);
  return pr;
}

}  // namespace

TEST_CASE("mode_theta") {
  LinkFunction logit{LinkKind::logit};
  auto p0 = make_params({0.0, 0.0, 0.0}, 0.0);
  Eigen::VectorXd x(2);
  x << 1.7, -2.3;
  CHECK(mode_theta(p0, logit, x) == doctest::Approx(0.5));

  auto p1 = make_params({0.25, 0.25, 0.25}, 0.0);
  x << 0.0, 0.0;
  CHECK(mode_theta(p1, logit, x) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-0.25))).epsilon(1e-12));

  LinkFunction loglog{LinkKind::loglog};
  CHECK(mode_theta(p0, loglog, x) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  Eigen::VectorXd bad(3);
  CHECK_THROWS_AS(mode_theta(p1, logit, bad), DimensionMismatch);
}

TEST_CASE("beta_shape and mode identity") {
  auto [a1, a2] = beta_shape(0.5, 2.0);
  CHECK(a1 == doctest::Approx(2.0));
  CHECK(a2 == doctest::Approx(2.0));
  auto [b1, b2] = beta_shape(0.25, 4.0);
  CHECK(b1 == doctest::Approx(2.0));
  CHECK(b2 == doctest::Approx(4.0));
  CHECK((b1 - 1.0) / (b1 + b2 - 2.0) == doctest::Approx(0.25));
  auto [c1, c2] = beta_shape(0.9, 40.0);
  CHECK(c1 == doctest::Approx(37.0));
  CHECK(c2 == doctest::Approx(5.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dt(0.001, 0.999), dm(0.01, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double th = dt(rng), m = dm(rng);
    auto [x1, x2] = beta_shape(th, m);
    CHECK((x1 - 1.0) / (x1 + x2 - 2.0) == doctest::Approx(th).epsilon(1e-12));
  }

  CHECK_THROWS_AS(beta_shape(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(beta_shape(0.5, -1.0), DomainError);
}

TEST_CASE("log_likelihood equals the beta log pdf") {
  LinkFunction logit{LinkKind::logit};
  // theta = 0.5, m = 2, y = 0.5: log Beta(2,2) density at 1/2 = log 1.5
  auto p = make_params({0.0, 0.0}, std::log(2.0));
  Observation obs{0.5, Eigen::VectorXd::Zero(1)};
  CHECK(log_likelihood(p, logit, obs) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-12));
  CHECK(log_likelihood(p, logit, obs) ==
        doctest::Approx(std::log(6.0) - std::log(4.0)).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dy(0.01, 0.99), dx(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    auto pr = random_params(rng, 2);
    Observation o;
    o.y = dy(rng);
    o.x = Eigen::VectorXd(2);
    o.x << dx(rng), dx(rng);
    const double th = mode_theta(pr, logit, o.x);
    auto [a1, a2] = beta_shape(th, pr.m());
    CHECK(log_likelihood(pr, logit, o) ==
          doctest::Approx(beta_log_pdf(o.y, a1, a2)).epsilon(1e-12));
  }

  Observation bad{1.0, Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(log_likelihood(p, logit, bad), DomainError);
}

TEST_CASE("complex path reduces to the real path on the real axis") {
  LinkFunction logit{LinkKind::logit};
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dy(0.05, 0.95), dx(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    auto pr = random_params(rng, 2);
    const double y = dy(rng);
    Eigen::VectorXcd xc(2);
    Eigen::VectorXd xr(2);
    xr << dx(rng), dx(rng);
    xc << cplx(xr(0), 0.0), cplx(xr(1), 0.0);
    const cplx l = log_likelihood(pr, logit, y, xc);
    CHECK(l.imag() == 0.0);
    CHECK(l.real() == doctest::Approx(log_likelihood(pr, logit, {y, xr}))
                          .epsilon(1e-14));
    const auto sc = score(pr, logit, y, xc);
    const auto sr = score(pr, logit, {y, xr});
    for (int j = 0; j < sc.size(); ++j) {
      CHECK(sc(j).imag() == 0.0);
      CHECK(sc(j).real() == doctest::Approx(sr(j)).epsilon(1e-12));
    }
    const auto dc = diag_score_S(pr, logit, y, xc);
    const auto dr = diag_score_S(pr, logit, {y, xr});
    CHECK(dc(0).imag() == 0.0);
    CHECK(dc(0).real() == doctest::Approx(dr(0)).epsilon(1e-12));
    CHECK(dc(1).real() == doctest::Approx(dr(1)).epsilon(1e-12));
  }
}

TEST_CASE("score matches finite differences of the log-likelihood") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dy(0.02, 0.98), dx(-2.0, 2.0);
  for (LinkKind k : {LinkKind::logit, LinkKind::probit, LinkKind::loglog,
                     LinkKind::cloglog}) {
    LinkFunction link{k};
    for (int i = 0; i < 50; ++i) {
      auto pr = random_params(rng, 2);
      Observation o;
      o.y = dy(rng);
      o.x = Eigen::VectorXd(2);
      o.x << dx(rng), dx(rng);
      const auto s = score(pr, link, o);
      const Eigen::VectorXd v0 = pr.as_vector();
      const double h = 1e-6;
      for (int j = 0; j < s.size(); ++j) {
        Eigen::VectorXd vp = v0, vm = v0;
        vp(j) += h;
        vm(j) -= h;
        const double fd = (log_likelihood(ModelParams::from_vector(vp), link, o) -
                           log_likelihood(ModelParams::from_vector(vm), link, o)) /
                          (2.0 * h);
        CHECK(s(j) == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("score_jacobian is symmetric and matches finite differences") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> dy(0.02, 0.98), dx(-2.0, 2.0);
  LinkFunction link{LinkKind::logit};
  for (int i = 0; i < 100; ++i) {
    auto pr = random_params(rng, 2);
    Observation o;
    o.y = dy(rng);
    o.x = Eigen::VectorXd(2);
    o.x << dx(rng), dx(rng);
    const auto J = score_jacobian(pr, link, o);
    CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::VectorXd v0 = pr.as_vector();
    const double h = 1e-6;
    for (int j = 0; j < v0.size(); ++j) {
      Eigen::VectorXd vp = v0, vm = v0;
      vp(j) += h;
      vm(j) -= h;
      const Eigen::VectorXd fd =
          (score(ModelParams::from_vector(vp), link, o) -
           score(ModelParams::from_vector(vm), link, o)) /
          (2.0 * h);
      for (int r = 0; r < v0.size(); ++r) {
        const double scale = std::max(std::abs(J(r, j)), 1.0);
        CHECK(std::abs(J(r, j) - fd(r)) / scale < 1e-5);
      }
    }
  }
}

TEST_CASE("diag_score_S spot value and zero mean") {
  LinkFunction logit{LinkKind::logit};
  // theta = 0.5, m = 2, y = 0.5: S1 = log(1/2) - psi(2) + psi(4)
  auto p = make_params({0.0, 0.0}, std::log(2.0));
  Observation obs{0.5, Eigen::VectorXd::Zero(1)};
  const auto s = diag_score_S(p, logit, obs);
  const double euler = 0.57721566490153286061;
  const double psi2 = 1.0 - euler;
  const double psi4 = -euler + 1.0 + 0.5 + 1.0 / 3.0;
  CHECK(s(0) == doctest::Approx(std::log(0.5) - psi2 + psi4).epsilon(1e-12));
  CHECK(s(0) == doctest::Approx(0.1402).epsilon(1e-3));

  // Monte-Carlo zero-mean check under the correctly specified model.
  std::mt19937_64 rng(23);
  auto pr = make_params({0.3, 0.4}, std::log(5.0));
  Eigen::VectorXd x(1);
  x << 0.7;
  const double th = mode_theta(pr, logit, x);
  const int n = 1000000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Vector2d sumsq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    Observation o{sample_response(th, pr.m(), rng), x};
    const auto v = diag_score_S(pr, logit, o);
    sum += v;
    sumsq += v.cwiseProduct(v);
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = sum(j) / n;
    const double sd = std::sqrt((sumsq(j) / n - mean * mean) / n);
    CHECK(std::abs(mean) < 4.0 * sd);
  }
}

TEST_CASE("sample_response moments and mode") {
  std::mt19937_64 rng(29);
  const double theta = 0.3, m = 40.0;
  const auto [a1, a2] = beta_shape(theta, m);
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  std::vector<int> hist(100, 0);
  for (int i = 0; i < n; ++i) {
    const double y = sample_response(theta, m, rng);
    CHECK_UNARY(y > 0.0);
    CHECK_UNARY(y < 1.0);
    sum += y;
    sumsq += y * y;
    hist[static_cast<int>(y * 100.0)]++;
  }
  const double mean = sum / n;
  const double want_mean = a1 / (a1 + a2);
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - want_mean) < 3.0 * std::sqrt(var / n));
  const int arg = static_cast<int>(std::max_element(hist.begin(), hist.end()) -
                                   hist.begin());
  CHECK(std::abs((arg + 0.5) / 100.0 - theta) < 0.02);
}

TEST_CASE("link round trip") {
  for (LinkKind k : {LinkKind::logit, LinkKind::probit, LinkKind::loglog,
                     LinkKind::cloglog}) {
    for (double u = 0.001; u < 0.9995; u += 0.007) {
      CHECK(link_value(k, link_inverse(k, u)) ==
            doctest::Approx(u).epsilon(1e-12));
    }
  }
}

TEST_CASE("complex analyticity of the log-likelihood in x1") {
  LinkFunction link{LinkKind::logit};
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dy(0.05, 0.95), dx(-2.0, 2.0);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    auto pr = random_params(rng, 2);
    const double y = dy(rng);
    Eigen::VectorXcd x(2);
    x << cplx(dx(rng), 0.3), cplx(dx(rng), 0.0);
    const cplx f0 = log_likelihood(pr, link, y, x);
    Eigen::VectorXcd xh = x;
    xh(0) += cplx(0.0, h);
    const cplx d_imag = (log_likelihood(pr, link, y, xh) - f0) / cplx(0.0, h);
    xh = x;
    xh(0) += h;
    const cplx d_real = (log_likelihood(pr, link, y, xh) - f0) / h;
    CHECK(std::abs(d_imag - d_real) / std::max(std::abs(d_real), 1.0) < 1e-5);
  }
}

TEST_CASE("cerf sanity against std::erf on the real axis") {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const cplx v = cerf({x, 0.0});
    CHECK(v.real() == doctest::Approx(std::erf(x)).epsilon(1e-10));
    CHECK(std::abs(v.imag()) < 1e-12);
  }
  // mpmath: erf(1+1j) = 1.3161512816979477 + 0.19045346923783468j
  const cplx v = cerf({1.0, 1.0});
  CHECK(v.real() == doctest::Approx(1.3161512816979477).epsilon(1e-10));
  CHECK(v.imag() == doctest::Approx(0.19045346923783468).epsilon(1e-10));
  // mpmath: erf(5+0.5j) = 0.999999999999264 - 1.8224e-12j
  const cplx w = cerf({5.0, 0.5});
  CHECK(w.real() == doctest::Approx(0.999999999999264279).epsilon(1e-10));
}
