// AVX2+FMA variants of the batched complex special-function kernels.
//
// Fast path covers Re z >= 0.5 (all in-model arguments); any group of four
// lanes containing a point outside that half plane is delegated to the
// scalar reference.  Vector log/atan/exp/sin/cos come from glibc's libmvec.

#include "modalme/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <complex>
#include <cstddef>

#include "modalme/complex_special.hpp"

extern "C" {
__m256d _ZGVdN4v_log(__m256d);
__m256d _ZGVdN4v_atan(__m256d);
__m256d _ZGVdN4v_exp(__m256d);
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
}

namespace modalme::kernels {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kPi = 3.14159265358979323846;

constexpr double kLanczosC[9] = {
    0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
    771.32342877765313,     -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kDigammaAsym[7] = {
    1.0 / 12.0,  -1.0 / 120.0,     1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};

constexpr double kBern[7] = {1.0 / 6.0,  -1.0 / 30.0,     1.0 / 42.0,
                             -1.0 / 30.0, 5.0 / 66.0,     -691.0 / 2730.0,
                             7.0 / 6.0};

inline __m256d vset1(double v) { return _mm256_set1_pd(v); }

// atan2 for x != 0; adds +/- pi when x < 0.
inline __m256d vatan2(__m256d y, __m256d x) {
  __m256d a = _ZGVdN4v_atan(_mm256_div_pd(y, x));
  const __m256d xneg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
  const __m256d yneg = _mm256_cmp_pd(y, _mm256_setzero_pd(), _CMP_LT_OQ);
  const __m256d pi = vset1(kPi);
  const __m256d corr = _mm256_blendv_pd(pi, _mm256_sub_pd(_mm256_setzero_pd(), pi), yneg);
  return _mm256_add_pd(a, _mm256_and_pd(xneg, corr));
}

// Principal complex log; (lr, li) out.
inline void vclog(__m256d x, __m256d y, __m256d& lr, __m256d& li) {
  const __m256d m2 = _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y));
  lr = _mm256_mul_pd(vset1(0.5), _ZGVdN4v_log(m2));
  li = vatan2(y, x);
}

// Complex multiply (ar,ai)*(br,bi).
inline void vcmul(__m256d ar, __m256d ai, __m256d br, __m256d bi, __m256d& cr,
                  __m256d& ci) {
  cr = _mm256_fmsub_pd(ar, br, _mm256_mul_pd(ai, bi));
  ci = _mm256_fmadd_pd(ar, bi, _mm256_mul_pd(ai, br));
}

// Complex reciprocal.
inline void vcinv(__m256d x, __m256d y, __m256d& ir, __m256d& ii) {
  const __m256d d = _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y));
  ir = _mm256_div_pd(x, d);
  ii = _mm256_div_pd(_mm256_sub_pd(_mm256_setzero_pd(), y), d);
}

inline bool all_fast_half_plane(__m256d x) {
  const __m256d ok = _mm256_cmp_pd(x, vset1(0.5), _CMP_GE_OQ);
  return _mm256_movemask_pd(ok) == 0xF;
}

void clgamma4(__m256d x, __m256d y, __m256d& outr, __m256d& outi) {
  const __m256d xm1 = _mm256_sub_pd(x, vset1(1.0));
  __m256d sr = vset1(kLanczosC[0]);
  __m256d si = _mm256_setzero_pd();
  for (int k = 1; k < 9; ++k) {
    const __m256d xk = _mm256_add_pd(xm1, vset1(static_cast<double>(k)));
    const __m256d d = _mm256_fmadd_pd(xk, xk, _mm256_mul_pd(y, y));
    const __m256d r = _mm256_div_pd(vset1(kLanczosC[k]), d);
    sr = _mm256_fmadd_pd(r, xk, sr);
    si = _mm256_fnmadd_pd(r, y, si);
  }
  const __m256d tr = _mm256_add_pd(xm1, vset1(7.5));
  __m256d ltr, lti, lsr, lsi;
  vclog(tr, y, ltr, lti);
  vclog(sr, si, lsr, lsi);
  const __m256d a = _mm256_add_pd(xm1, vset1(0.5));
  // (a + i y) * (ltr + i lti) - (tr + i y) + (lsr + i lsi) + C
  outr = _mm256_add_pd(
      _mm256_add_pd(vset1(kLogSqrt2Pi),
                    _mm256_fmsub_pd(a, ltr, _mm256_mul_pd(y, lti))),
      _mm256_sub_pd(lsr, tr));
  outi = _mm256_add_pd(_mm256_fmadd_pd(a, lti, _mm256_mul_pd(y, ltr)),
                       _mm256_sub_pd(lsi, y));
}

// Shift z up until |z|^2 >= 100, accumulating f(z) per step (f = 1/z for
// digamma, 1/z^2 for trigamma), then evaluate the asymptotic series.
template <bool Trigamma>
void psi4(__m256d x, __m256d y, __m256d& outr, __m256d& outi) {
  __m256d shr = _mm256_setzero_pd();
  __m256d shi = _mm256_setzero_pd();
  const __m256d r2lim = vset1(100.0);
  while (true) {
    const __m256d m2 = _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y));
    const __m256d need = _mm256_cmp_pd(m2, r2lim, _CMP_LT_OQ);
    if (_mm256_movemask_pd(need) == 0) break;
    __m256d ir, ii;
    vcinv(x, y, ir, ii);
    if (Trigamma) {
      __m256d qr, qi;
      vcmul(ir, ii, ir, ii, qr, qi);
      ir = qr;
      ii = qi;
    }
    shr = _mm256_add_pd(shr, _mm256_and_pd(need, ir));
    shi = _mm256_add_pd(shi, _mm256_and_pd(need, ii));
    x = _mm256_add_pd(x, _mm256_and_pd(need, vset1(1.0)));
  }
  __m256d ir, ii;
  vcinv(x, y, ir, ii);
  __m256d i2r, i2i;
  vcmul(ir, ii, ir, ii, i2r, i2i);
  const double* coef = Trigamma ? kBern : kDigammaAsym;
  __m256d ser_r = _mm256_setzero_pd();
  __m256d ser_i = _mm256_setzero_pd();
  for (int n = 6; n >= 0; --n) {
    ser_r = _mm256_add_pd(ser_r, vset1(coef[n]));
    __m256d tr, ti;
    vcmul(ser_r, ser_i, i2r, i2i, tr, ti);
    ser_r = tr;
    ser_i = ti;
  }
  if (Trigamma) {
    // 1/z + 1/(2 z^2) + series/z + shift
    __m256d sr, si;
    vcmul(ser_r, ser_i, ir, ii, sr, si);
    outr = _mm256_add_pd(_mm256_add_pd(ir, _mm256_mul_pd(vset1(0.5), i2r)),
                         _mm256_add_pd(sr, shr));
    outi = _mm256_add_pd(_mm256_add_pd(ii, _mm256_mul_pd(vset1(0.5), i2i)),
                         _mm256_add_pd(si, shi));
  } else {
    // log z - 1/(2 z) - series - shift
    __m256d lr, li;
    vclog(x, y, lr, li);
    outr = _mm256_sub_pd(_mm256_fnmadd_pd(vset1(0.5), ir, lr),
                         _mm256_add_pd(ser_r, shr));
    outi = _mm256_sub_pd(_mm256_fnmadd_pd(vset1(0.5), ii, li),
                         _mm256_add_pd(ser_i, shi));
  }
}

using ScalarFn = std::complex<double> (*)(std::complex<double>);

template <void (*Vec4)(__m256d, __m256d, __m256d&, __m256d&), ScalarFn Scalar>
void run_batch(const double* zre, const double* zim, double* out_re,
               double* out_im, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(zre + i);
    const __m256d y = _mm256_loadu_pd(zim + i);
    if (all_fast_half_plane(x)) {
      __m256d r, im;
      Vec4(x, y, r, im);
      _mm256_storeu_pd(out_re + i, r);
      _mm256_storeu_pd(out_im + i, im);
    } else {
      for (std::size_t k = i; k < i + 4; ++k) {
        const std::complex<double> v = Scalar({zre[k], zim[k]});
        out_re[k] = v.real();
        out_im[k] = v.imag();
      }
    }
  }
  for (; i < n; ++i) {
    const std::complex<double> v = Scalar({zre[i], zim[i]});
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

void digamma4(__m256d x, __m256d y, __m256d& r, __m256d& i) {
  psi4<false>(x, y, r, i);
}
void trigamma4(__m256d x, __m256d y, __m256d& r, __m256d& i) {
  psi4<true>(x, y, r, i);
}

void avx2_clgamma(const double* zre, const double* zim, double* out_re,
                  double* out_im, std::size_t n) {
  run_batch<clgamma4, modalme::clog_gamma>(zre, zim, out_re, out_im, n);
}
void avx2_cdigamma(const double* zre, const double* zim, double* out_re,
                   double* out_im, std::size_t n) {
  run_batch<digamma4, modalme::cdigamma>(zre, zim, out_re, out_im, n);
}
void avx2_ctrigamma(const double* zre, const double* zim, double* out_re,
                    double* out_im, std::size_t n) {
  run_batch<trigamma4, modalme::ctrigamma>(zre, zim, out_re, out_im, n);
}

void avx2_cexp(const double* zre, const double* zim, double* out_re,
               double* out_im, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(zre + i);
    const __m256d y = _mm256_loadu_pd(zim + i);
    const __m256d e = _ZGVdN4v_exp(x);
    _mm256_storeu_pd(out_re + i, _mm256_mul_pd(e, _ZGVdN4v_cos(y)));
    _mm256_storeu_pd(out_im + i, _mm256_mul_pd(e, _ZGVdN4v_sin(y)));
  }
  for (; i < n; ++i) {
    const std::complex<double> v = std::exp(std::complex<double>(zre[i], zim[i]));
    out_re[i] = v.real();
    out_im[i] = v.imag();
  }
}

constexpr detail::Dispatch kAvx2{avx2_clgamma, avx2_cdigamma, avx2_ctrigamma,
                                 avx2_cexp};

}  // namespace

namespace detail {
const Dispatch* avx2_dispatch() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &kAvx2;
  return nullptr;
}
}  // namespace detail

}  // namespace modalme::kernels

#else

namespace modalme::kernels::detail {
const Dispatch* avx2_dispatch() { return nullptr; }
}  // namespace modalme::kernels::detail

#endif  // __AVX2__ && __FMA__
