#pragma once

// Link functions mapping the linear predictor to the mode in (0,1), on the
// real axis and on the complex strip used by the corrected objectives.

#include <complex>
#include <cstddef>
#include <string>

#include "modalme/errors.hpp"

namespace modalme {

using cplx = std::complex<double>;

enum class LinkKind { logit, probit, loglog, cloglog };

struct LinkFunction {
  LinkKind kind = LinkKind::logit;
};

LinkKind link_from_string(const std::string& name);
std::string link_to_string(LinkKind k);

// g, g', g'' at a real or complex linear predictor.
double link_value(LinkKind k, double eta);
double link_deriv(LinkKind k, double eta);
double link_deriv2(LinkKind k, double eta);
cplx link_value(LinkKind k, cplx eta);
cplx link_deriv(LinkKind k, cplx eta);
cplx link_deriv2(LinkKind k, cplx eta);

// g^{-1}(u), u in (0,1).
double link_inverse(LinkKind k, double u);

// Error function on the complex plane (series for |z| <= 4, Lentz continued
// fraction beyond), used by the probit link.
cplx cerf(cplx z);

// Batched evaluation of theta = g(eta) together with g' and g'' (pass null
// for derivatives that are not needed).  Backed by the cexp kernel for the
// exp-based links; probit falls back to scalar cerf.
void clink_batch(LinkKind k, const double* eta_re, const double* eta_im,
                 double* th_re, double* th_im, double* gp_re, double* gp_im,
                 double* gpp_re, double* gpp_im, std::size_t n);

}  // namespace modalme
