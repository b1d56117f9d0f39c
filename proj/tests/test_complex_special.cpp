#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "modalme/complex_special.hpp"

using modalme::cplx;

namespace {
#include "data/special_oracle.inc"

double rel_err(cplx got, cplx want) {
  const double scale = std::max(std::abs(want), 1.0);
  return std::abs(got - want) / scale;
}
}  // namespace

TEST_CASE("clog_gamma spot values") {
  CHECK(std::abs(modalme::clog_gamma({1.0, 0.0})) < 1e-14);
  const cplx half = modalme::clog_gamma({0.5, 0.0});
  CHECK(half.real() == doctest::Approx(0.5723649429247001).epsilon(1e-13));
  CHECK(std::abs(half.imag()) < 1e-14);
  // mpmath: loggamma(2+3i)
  const cplx want(-2.0928517530927333495641886250303752616932852964474,
                  2.302396543466867626153707617788581578292789221371);
  CHECK(rel_err(modalme::clog_gamma({2.0, 3.0}), want) < 1e-12);
}

TEST_CASE("cdigamma spot values") {
  const double euler = 0.57721566490153286061;
  CHECK(modalme::cdigamma({1.0, 0.0}).real() ==
        doctest::Approx(-euler).epsilon(1e-13));
  CHECK(modalme::cdigamma({2.0, 0.0}).real() ==
        doctest::Approx(1.0 - euler).epsilon(1e-13));
  const cplx want(0.98634056629390090765213632273589799831588305392241,
                  1.1861804687361432327469430393567515940450420139915);
  CHECK(rel_err(modalme::cdigamma({1.5, 2.5}), want) < 1e-12);
}

TEST_CASE("ctrigamma spot values") {
  const double pi2_6 = 1.6449340668482264365;
  CHECK(modalme::ctrigamma({1.0, 0.0}).real() ==
        doctest::Approx(pi2_6).epsilon(1e-13));
  CHECK(modalme::ctrigamma({2.0, 0.0}).real() ==
        doctest::Approx(pi2_6 - 1.0).epsilon(1e-13));
  const cplx want(0.036724551941014544560744745478442489842714357797088,
                  -1.1170686578296001268118885398707365135841845731183);
  CHECK(rel_err(modalme::ctrigamma({0.5, 1.0}), want) < 1e-10);
}

TEST_CASE("agreement with the arbitrary-precision table") {
  double worst_lg = 0.0, worst_dg = 0.0, worst_tg = 0.0;
  for (int i = 0; i < kOracleCount; ++i) {
    const cplx z(kOracle[i][0], kOracle[i][1]);
    worst_lg = std::max(
        worst_lg,
        rel_err(modalme::clog_gamma(z), {kOracle[i][2], kOracle[i][3]}));
    worst_dg = std::max(
        worst_dg, rel_err(modalme::cdigamma(z), {kOracle[i][4], kOracle[i][5]}));
    worst_tg = std::max(
        worst_tg,
        rel_err(modalme::ctrigamma(z), {kOracle[i][6], kOracle[i][7]}));
  }
  CHECK(worst_lg < 1e-12);
  CHECK(worst_dg < 1e-12);
  CHECK(worst_tg < 1e-10);
}

TEST_CASE("recurrence log Gamma(z+1) = log Gamma(z) + log z") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> re(0.1, 50.0), im(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const cplx z(re(rng), im(rng));
    const cplx lhs = modalme::clog_gamma(z + 1.0);
    const cplx rhs = modalme::clog_gamma(z) + std::log(z);
    CHECK(rel_err(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("conjugate symmetry") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(0.1, 30.0), im(0.01, 30.0);
  for (int i = 0; i < 200; ++i) {
    const cplx z(re(rng), im(rng));
    CHECK(modalme::clog_gamma(std::conj(z)) ==
          std::conj(modalme::clog_gamma(z)));
    CHECK(modalme::cdigamma(std::conj(z)) == std::conj(modalme::cdigamma(z)));
    CHECK(modalme::ctrigamma(std::conj(z)) ==
          std::conj(modalme::ctrigamma(z)));
  }
}

TEST_CASE("real-axis agreement with the real implementations") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> xs(0.01, 100.0);
  for (int i = 0; i < 500; ++i) {
    const double x = xs(rng);
    const cplx lg = modalme::clog_gamma({x, 0.0});
    CHECK(lg.imag() == 0.0);
    const double scale = std::max(std::abs(lg.real()), 1.0);
    CHECK(std::abs(lg.real() - modalme::rlog_gamma(x)) / scale < 1e-13);
    CHECK(std::abs(lg.real() - std::lgamma(x)) / scale < 1e-13);
    CHECK(modalme::cdigamma({x, 0.0}).imag() == 0.0);
    CHECK(modalme::cdigamma({x, 0.0}).real() ==
          doctest::Approx(modalme::rdigamma(x)).epsilon(1e-13));
  }
}

TEST_CASE("cdigamma matches central differences of clog_gamma") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(0.5, 20.0), im(-20.0, 20.0);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const cplx z(re(rng), im(rng));
    const cplx d_re =
        (modalme::clog_gamma(z + h) - modalme::clog_gamma(z - h)) / (2.0 * h);
    const cplx d_im = (modalme::clog_gamma(z + cplx(0.0, h)) -
                       modalme::clog_gamma(z - cplx(0.0, h))) /
                      cplx(0.0, 2.0 * h);
    const cplx dg = modalme::cdigamma(z);
    CHECK(std::abs(d_re - dg) / std::max(std::abs(dg), 1.0) < 1e-6);
    CHECK(std::abs(d_im - dg) / std::max(std::abs(dg), 1.0) < 1e-6);
  }
}

TEST_CASE("poles raise PoleError") {
  CHECK_THROWS_AS(modalme::clog_gamma({0.0, 0.0}), modalme::PoleError);
  CHECK_THROWS_AS(modalme::clog_gamma({-3.0, 0.0}), modalme::PoleError);
  CHECK_THROWS_AS(modalme::cdigamma({-1.0, 1e-14}), modalme::PoleError);
  CHECK_THROWS_AS(modalme::ctrigamma({-2.0, 0.0}), modalme::PoleError);
  // Just off the pole is fine.
  CHECK_NOTHROW(modalme::clog_gamma({-3.0, 1e-6}));
  CHECK_NOTHROW(modalme::clog_gamma({-2.5, 0.0}));
}
