#include "modalme/kernels.hpp"

#include <complex>

#include "modalme/complex_special.hpp"
#include "modalme/errors.hpp"

namespace modalme::kernels {

namespace {

void scalar_clgamma(const double* zre, const double* zim, double* out_re,
                    double* out_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx v = clog_gamma({zre[i], zim[i]});
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

void scalar_cdigamma(const double* zre, const double* zim, double* out_re,
                     double* out_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx v = cdigamma({zre[i], zim[i]});
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

void scalar_ctrigamma(const double* zre, const double* zim, double* out_re,
                      double* out_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx v = ctrigamma({zre[i], zim[i]});
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

void scalar_cexp(const double* zre, const double* zim, double* out_re,
                 double* out_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx v = std::exp(cplx(zre[i], zim[i]));
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

constexpr detail::Dispatch kScalar{scalar_clgamma, scalar_cdigamma,
                                   scalar_ctrigamma, scalar_cexp};

const detail::Dispatch* pick_default() {
  if (const detail::Dispatch* d = detail::avx2_dispatch()) return d;
  return &kScalar;
}

const detail::Dispatch* g_active = nullptr;

const detail::Dispatch* active() {
  if (!g_active) g_active = pick_default();
  return g_active;
}

}  // namespace

#if !MODALME_HAVE_AVX2_TU
namespace detail {
const Dispatch* avx2_dispatch() { return nullptr; }
}  // namespace detail
#endif

Backend active_backend() {
  return active() == &kScalar ? Backend::scalar : Backend::avx2;
}

void set_backend(Backend b) {
  if (b == Backend::scalar) {
    g_active = &kScalar;
    return;
  }
  const detail::Dispatch* d = detail::avx2_dispatch();
  if (!d) throw ConfigError("avx2 backend not available on this CPU/build");
  g_active = d;
}

void clgamma_batch(const double* zre, const double* zim, double* out_re,
                   double* out_im, std::size_t n) {
  active()->clgamma(zre, zim, out_re, out_im, n);
}

void cdigamma_batch(const double* zre, const double* zim, double* out_re,
                    double* out_im, std::size_t n) {
  active()->cdigamma(zre, zim, out_re, out_im, n);
}

void ctrigamma_batch(const double* zre, const double* zim, double* out_re,
                     double* out_im, std::size_t n) {
  active()->ctrigamma(zre, zim, out_re, out_im, n);
}

void cexp_batch(const double* zre, const double* zim, double* out_re,
                double* out_im, std::size_t n) {
  active()->cexp(zre, zim, out_re, out_im, n);
}

}  // namespace modalme::kernels
