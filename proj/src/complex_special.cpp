#include "modalme/complex_special.hpp"

#include <cmath>
#include <cstdlib>

namespace modalme {

namespace {

constexpr double kPoleTol = 1e-12;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kPi = 3.14159265358979323846;

// Lanczos g = 7, 9 coefficients (Godfrey).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
    771.32342877765313,     -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};

// Asymptotic series coefficients B_{2n}/(2n), n = 1..7.
constexpr double kDigammaAsym[7] = {
    1.0 / 12.0,  -1.0 / 120.0,      1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0,  1.0 / 12.0};

// B_{2n}, n = 1..7, for the trigamma series.
constexpr double kBern[7] = {1.0 / 6.0,  -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
                             5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};

constexpr double kShiftRadius = 10.0;

// cot(pi z) for Im z >= 1 without overflow: with w = e^{2 pi i z} (|w| <=
// e^{-2 pi} up there), cot(pi z) = i (w + 1)/(w - 1).  The direct
// cos(pi z)/sin(pi z) form overflows to inf/inf = NaN once |Im z| exceeds
// ~230, which the reflection formulas below would otherwise hit for
// arguments deep in a half plane.
cplx cot_pi_upper(cplx z) {
  const cplx w = std::exp(cplx(0.0, 2.0 * kPi) * z);
  return cplx(0.0, 1.0) * (w + 1.0) / (w - 1.0);
}

// 1/sin^2(pi z) for Im z >= 1, same device: -4 w / (1 - w)^2.
cplx inv_sin2_pi_upper(cplx z) {
  const cplx w = std::exp(cplx(0.0, 2.0 * kPi) * z);
  const cplx d = 1.0 - w;
  return -4.0 * w / (d * d);
}

cplx lanczos_lgamma_half_plane(cplx z) {
  // Valid for Re z >= 0.5.
  const cplx zm1 = z - 1.0;
  cplx sum = kLanczos[0];
  for (int k = 1; k < 9; ++k) sum += kLanczos[k] / (zm1 + static_cast<double>(k));
  const cplx t = zm1 + kLanczosG + 0.5;
  return kLogSqrt2Pi + (zm1 + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace

namespace detail {

void check_pole(cplx z) {
  if (std::abs(z.imag()) > kPoleTol) return;
  const double re = z.real();
  if (re > 0.5) return;
  const double nearest = std::nearbyint(re);
  if (nearest <= 0.0 && std::abs(re - nearest) < kPoleTol) {
    throw PoleError("argument within tolerance of gamma pole at " +
                    std::to_string(static_cast<long>(nearest)));
  }
}

}  // namespace detail

cplx clog_gamma(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) ||
      z.real() < -1e6) {
    // Non-finite input, or so far left that the shifted continuation is
    // unaffordable and the pole spacing is below double resolution anyway.
    const double nan = std::nan("");
    return {nan, nan};
  }
  detail::check_pole(z);
  if (z.real() >= 0.5) return lanczos_lgamma_half_plane(z);
  // Shift into the right half plane: log Gamma(z) = log Gamma(z+k) - sum of
  // principal log(z+j).  This is the defining continuation of the principal
  // branch, so no 2*pi*i corrections are needed.
  cplx shift(0.0, 0.0);
  while (z.real() < 0.5) {
    shift += std::log(z);
    z += 1.0;
  }
  return lanczos_lgamma_half_plane(z) - shift;
}

cplx cdigamma(cplx z) {
  detail::check_pole(z);
  if (z.real() < 0.5) {
    // Reflection: psi(z) = psi(1 - z) - pi*cot(pi z).
    const double y = z.imag();
    cplx cot;
    if (std::abs(y) < 1.0) {
      const cplx piz = kPi * z;
      cot = std::cos(piz) / std::sin(piz);
    } else if (y > 0.0) {
      cot = cot_pi_upper(z);
    } else {
      cot = std::conj(cot_pi_upper(std::conj(z)));
    }
    return cdigamma(1.0 - z) - kPi * cot;
  }
  cplx shift(0.0, 0.0);
  while (std::abs(z) < kShiftRadius) {
    shift += 1.0 / z;
    z += 1.0;
  }
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  cplx series(0.0, 0.0);
  for (int n = 6; n >= 0; --n) series = (series + kDigammaAsym[n]) * inv2;
  return std::log(z) - 0.5 * inv - series - shift;
}

cplx ctrigamma(cplx z) {
  detail::check_pole(z);
  if (z.real() < 0.5) {
    // psi'(z) = -psi'(1 - z) + pi^2 / sin^2(pi z).
    const double y = z.imag();
    cplx inv_s2;
    if (std::abs(y) < 1.0) {
      const cplx s = std::sin(kPi * z);
      inv_s2 = 1.0 / (s * s);
    } else if (y > 0.0) {
      inv_s2 = inv_sin2_pi_upper(z);
    } else {
      inv_s2 = std::conj(inv_sin2_pi_upper(std::conj(z)));
    }
    return -ctrigamma(1.0 - z) + kPi * kPi * inv_s2;
  }
  cplx shift(0.0, 0.0);
  while (std::abs(z) < kShiftRadius) {
    shift += 1.0 / (z * z);
    z += 1.0;
  }
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  cplx series(0.0, 0.0);
  for (int n = 6; n >= 0; --n) series = (series + kBern[n]) * inv2;
  return inv + 0.5 * inv2 + series * inv + shift;
}

double rlog_gamma(double x) {
  if (std::isnan(x)) return x;  // would otherwise recurse via reflection
  if (x <= 0.0) {
    const double nearest = std::nearbyint(x);
    if (std::abs(x - nearest) < kPoleTol)
      throw PoleError("log-gamma pole at non-positive integer");
  }
  if (x >= 0.5) {
    const double xm1 = x - 1.0;
    double sum = kLanczos[0];
    for (int k = 1; k < 9; ++k) sum += kLanczos[k] / (xm1 + k);
    const double t = xm1 + kLanczosG + 0.5;
    return kLogSqrt2Pi + (xm1 + 0.5) * std::log(t) - t + std::log(sum);
  }
  return std::log(kPi / std::abs(std::sin(kPi * x))) - rlog_gamma(1.0 - x);
}

double rdigamma(double x) {
  return cdigamma(cplx(x, 0.0)).real();
}

double rtrigamma(double x) {
  return ctrigamma(cplx(x, 0.0)).real();
}

}  // namespace modalme
