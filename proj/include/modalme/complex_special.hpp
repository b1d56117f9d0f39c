#pragma once

// Complex-argument log-gamma, digamma and trigamma.
//
// clog_gamma uses the Lanczos approximation (g = 7, 9 coefficients) with the
// reflection formula for Re z < 0.5.  cdigamma/ctrigamma shift the argument
// up by recurrence until |z| >= 10 and then apply the asymptotic Bernoulli
// series through B14.  All three return principal-branch values and satisfy
// f(conj z) = conj f(z).

#include <complex>

#include "modalme/errors.hpp"

namespace modalme {

using cplx = std::complex<double>;

// Principal branch of log Gamma(z).  Throws PoleError if z is within 1e-12
// of a non-positive real integer.
cplx clog_gamma(cplx z);

// psi(z) = d/dz log Gamma(z).
cplx cdigamma(cplx z);

// psi'(z).
cplx ctrigamma(cplx z);

// Real-axis counterparts (x > 0), same algorithms.
double rlog_gamma(double x);
double rdigamma(double x);
double rtrigamma(double x);

namespace detail {
// Throws PoleError when z is within tolerance of {0, -1, -2, ...}.
void check_pole(cplx z);
}  // namespace detail

}  // namespace modalme
