#include "modalme/links.hpp"

#include <cmath>
#include <vector>

#include "modalme/kernels.hpp"

namespace modalme {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kTwoOverSqrtPi = 1.12837916709551257390;

template <typename T>
T logit_value(T eta) {
  return 1.0 / (1.0 + std::exp(-eta));
}

template <typename T>
T loglog_value(T eta) {
  return std::exp(-std::exp(-eta));
}

template <typename T>
T cloglog_value(T eta) {
  return 1.0 - std::exp(-std::exp(eta));
}

double probit_value(double eta) { return 0.5 * std::erfc(-eta / kSqrt2); }

cplx probit_value(cplx eta) { return 0.5 * (1.0 + cerf(eta / kSqrt2)); }

template <typename T>
T value_impl(LinkKind k, T eta) {
  switch (k) {
    case LinkKind::logit: return logit_value(eta);
    case LinkKind::probit: return probit_value(eta);
    case LinkKind::loglog: return loglog_value(eta);
    case LinkKind::cloglog: return cloglog_value(eta);
  }
  throw ConfigError("unknown link");
}

template <typename T>
T deriv_impl(LinkKind k, T eta) {
  switch (k) {
    case LinkKind::logit: {
      const T g = logit_value(eta);
      return g * (1.0 - g);
    }
    case LinkKind::probit:
      return kInvSqrt2Pi * std::exp(-0.5 * eta * eta);
    case LinkKind::loglog: {
      const T e = std::exp(-eta);
      return e * std::exp(-e);
    }
    case LinkKind::cloglog: {
      const T e = std::exp(eta);
      return e * std::exp(-e);
    }
  }
  throw ConfigError("unknown link");
}

template <typename T>
T deriv2_impl(LinkKind k, T eta) {
  switch (k) {
    case LinkKind::logit: {
      const T g = logit_value(eta);
      return g * (1.0 - g) * (1.0 - 2.0 * g);
    }
    case LinkKind::probit:
      return -eta * kInvSqrt2Pi * std::exp(-0.5 * eta * eta);
    case LinkKind::loglog: {
      const T e = std::exp(-eta);
      return std::exp(-e) * e * (e - 1.0);
    }
    case LinkKind::cloglog: {
      const T e = std::exp(eta);
      return e * std::exp(-e) * (1.0 - e);
    }
  }
  throw ConfigError("unknown link");
}

// Acklam's rational approximation for the standard normal quantile,
// polished with two Newton steps against erfc.
double probit_inverse(double u) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double err = probit_value(x) - u;
    x -= err / (kInvSqrt2Pi * std::exp(-0.5 * x * x));
  }
  return x;
}

thread_local std::vector<double> tl_buf[6];

double* buf(int i, std::size_t n) {
  tl_buf[i].resize(n);
  return tl_buf[i].data();
}

}  // namespace

LinkKind link_from_string(const std::string& name) {
  if (name == "logit") return LinkKind::logit;
  if (name == "probit") return LinkKind::probit;
  if (name == "loglog") return LinkKind::loglog;
  if (name == "cloglog") return LinkKind::cloglog;
  throw ConfigError("unknown link '" + name + "'");
}

std::string link_to_string(LinkKind k) {
  switch (k) {
    case LinkKind::logit: return "logit";
    case LinkKind::probit: return "probit";
    case LinkKind::loglog: return "loglog";
    case LinkKind::cloglog: return "cloglog";
  }
  return "?";
}

double link_value(LinkKind k, double eta) { return value_impl(k, eta); }
double link_deriv(LinkKind k, double eta) { return deriv_impl(k, eta); }
double link_deriv2(LinkKind k, double eta) { return deriv2_impl(k, eta); }
cplx link_value(LinkKind k, cplx eta) { return value_impl(k, eta); }
cplx link_deriv(LinkKind k, cplx eta) { return deriv_impl(k, eta); }
cplx link_deriv2(LinkKind k, cplx eta) { return deriv2_impl(k, eta); }

double link_inverse(LinkKind k, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("link_inverse needs u in (0,1)");
  switch (k) {
    case LinkKind::logit: return std::log(u / (1.0 - u));
    case LinkKind::probit: return probit_inverse(u);
    case LinkKind::loglog: return -std::log(-std::log(u));
    case LinkKind::cloglog: return std::log(-std::log(1.0 - u));
  }
  throw ConfigError("unknown link");
}

cplx cerf(cplx z) {
  if (std::abs(z) <= 4.0) {
    // erf(z) = (2/sqrt(pi)) exp(-z^2) sum z (2 z^2)^n / (2n+1)!!
    const cplx zz2 = 2.0 * z * z;
    cplx term = z;
    cplx sum = z;
    for (int n = 1; n < 200; ++n) {
      term *= zz2 / static_cast<double>(2 * n + 1);
      sum += term;
      if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return kTwoOverSqrtPi * std::exp(-z * z) * sum;
  }
  if (z.real() < 0.0) return -cerf(-z);
  // erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
  // evaluated bottom-up.
  cplx f(0.0, 0.0);
  for (int k = 60; k >= 1; --k) f = (0.5 * k) / (z + f);
  const cplx erfc = std::exp(-z * z) / (1.77245385090551602730 * (z + f));
  return 1.0 - erfc;
}

void clink_batch(LinkKind k, const double* eta_re, const double* eta_im,
                 double* th_re, double* th_im, double* gp_re, double* gp_im,
                 double* gpp_re, double* gpp_im, std::size_t n) {
  using kernels::cexp_batch;
  switch (k) {
    case LinkKind::logit: {
      double* nr = buf(0, n);
      double* ni = buf(1, n);
      double* er = buf(2, n);
      double* ei = buf(3, n);
      for (std::size_t i = 0; i < n; ++i) {
        nr[i] = -eta_re[i];
        ni[i] = -eta_im[i];
      }
      cexp_batch(nr, ni, er, ei, n);
      for (std::size_t i = 0; i < n; ++i) {
        const double ar = 1.0 + er[i], ai = ei[i];
        const double d = ar * ar + ai * ai;
        th_re[i] = ar / d;
        th_im[i] = -ai / d;
      }
      break;
    }
    case LinkKind::loglog: {
      double* nr = buf(0, n);
      double* ni = buf(1, n);
      double* fr = buf(2, n);
      double* fi = buf(3, n);
      for (std::size_t i = 0; i < n; ++i) {
        nr[i] = -eta_re[i];
        ni[i] = -eta_im[i];
      }
      cexp_batch(nr, ni, fr, fi, n);  // F = exp(-eta)
      for (std::size_t i = 0; i < n; ++i) {
        nr[i] = -fr[i];
        ni[i] = -fi[i];
      }
      cexp_batch(nr, ni, th_re, th_im, n);  // theta = exp(-F)
      if (gp_re) {
        for (std::size_t i = 0; i < n; ++i) {
          gp_re[i] = fr[i] * th_re[i] - fi[i] * th_im[i];
          gp_im[i] = fr[i] * th_im[i] + fi[i] * th_re[i];
          if (gpp_re) {
            const double fm1r = fr[i] - 1.0, fm1i = fi[i];
            gpp_re[i] = gp_re[i] * fm1r - gp_im[i] * fm1i;
            gpp_im[i] = gp_re[i] * fm1i + gp_im[i] * fm1r;
          }
        }
      }
      return;
    }
    case LinkKind::cloglog: {
      double* gr = buf(0, n);
      double* gi = buf(1, n);
      double* hr = buf(2, n);
      double* hi = buf(3, n);
      cexp_batch(eta_re, eta_im, gr, gi, n);  // G = exp(eta)
      double* nr = buf(4, n);
      double* ni = buf(5, n);
      for (std::size_t i = 0; i < n; ++i) {
        nr[i] = -gr[i];
        ni[i] = -gi[i];
      }
      cexp_batch(nr, ni, hr, hi, n);  // H = exp(-G)
      for (std::size_t i = 0; i < n; ++i) {
        th_re[i] = 1.0 - hr[i];
        th_im[i] = -hi[i];
        if (gp_re) {
          gp_re[i] = gr[i] * hr[i] - gi[i] * hi[i];
          gp_im[i] = gr[i] * hi[i] + gi[i] * hr[i];
          if (gpp_re) {
            const double mr = 1.0 - gr[i], mi = -gi[i];
            gpp_re[i] = gp_re[i] * mr - gp_im[i] * mi;
            gpp_im[i] = gp_re[i] * mi + gp_im[i] * mr;
          }
        }
      }
      return;
    }
    case LinkKind::probit: {
      for (std::size_t i = 0; i < n; ++i) {
        const cplx eta(eta_re[i], eta_im[i]);
        const cplx th = probit_value(eta);
        th_re[i] = th.real();
        th_im[i] = th.imag();
        if (gp_re) {
          const cplx gp = deriv_impl(LinkKind::probit, eta);
          gp_re[i] = gp.real();
          gp_im[i] = gp.imag();
          if (gpp_re) {
            const cplx gpp = -eta * gp;
            gpp_re[i] = gpp.real();
            gpp_im[i] = gpp.imag();
          }
        }
      }
      return;
    }
  }
  // logit derivatives from theta.
  if (gp_re) {
    for (std::size_t i = 0; i < n; ++i) {
      const double tr = th_re[i], ti = th_im[i];
      const double omr = 1.0 - tr, omi = -ti;
      gp_re[i] = tr * omr - ti * omi;
      gp_im[i] = tr * omi + ti * omr;
      if (gpp_re) {
        const double mr = 1.0 - 2.0 * tr, mi = -2.0 * ti;
        gpp_re[i] = gp_re[i] * mr - gp_im[i] * mi;
        gpp_im[i] = gp_re[i] * mi + gp_im[i] * mr;
      }
    }
  }
}

}  // namespace modalme
