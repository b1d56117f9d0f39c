#pragma once

// Batched complex special-function kernels used by the corrected-objective
// inner loops.  Inputs and outputs are split re/im arrays of length n.
//
// Two backends: a scalar reference (loops over the functions in
// complex_special.hpp) and an AVX2 variant selected at runtime when the CPU
// supports AVX2+FMA.  The AVX2 variant handles the in-model fast path
// (Re z >= 0.5 after shifting) and falls back to the scalar functions for
// the rare remaining lanes, so both backends agree to ~1e-13 relative.

#include <cstddef>

namespace modalme::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();

// Force a backend, mainly for equivalence tests.  Throws ConfigError when
// the requested backend is not available on this CPU.
void set_backend(Backend b);

void clgamma_batch(const double* zre, const double* zim, double* out_re,
                   double* out_im, std::size_t n);
void cdigamma_batch(const double* zre, const double* zim, double* out_re,
                    double* out_im, std::size_t n);
void ctrigamma_batch(const double* zre, const double* zim, double* out_re,
                     double* out_im, std::size_t n);
void cexp_batch(const double* zre, const double* zim, double* out_re,
                double* out_im, std::size_t n);

namespace detail {
struct Dispatch {
  void (*clgamma)(const double*, const double*, double*, double*, std::size_t);
  void (*cdigamma)(const double*, const double*, double*, double*, std::size_t);
  void (*ctrigamma)(const double*, const double*, double*, double*,
                    std::size_t);
  void (*cexp)(const double*, const double*, double*, double*, std::size_t);
};
// Implemented in kernels_avx2.cpp; null when the TU is not built.
const Dispatch* avx2_dispatch();
}  // namespace detail

}  // namespace modalme::kernels
