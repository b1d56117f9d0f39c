#pragma once

// Simulation-extrapolation: refit naively at inflated error levels zeta and
// extrapolate the estimate trend back to zeta = -1 with a quadratic.

#include <cstdint>
#include <vector>

#include "modalme/fit.hpp"

namespace modalme {

struct SimexConfig {
  // <= 0 means: estimate from replicates via estimate_sigma_u2.
  double sigma_u2 = -1.0;
  std::vector<double> zeta_grid = {0.125, 0.25, 0.375, 0.5,
                                   0.625, 0.75, 0.875, 1.0};
  std::size_t B = 300;  // naive refits per zeta level
  FitOptions fit_options = {.optimizer = OptimizerKind::bfgs};
};

// Componentwise least-squares quadratic in zeta evaluated at `target`;
// exact for sequences that are themselves quadratic in zeta.
double quadratic_extrapolate(const std::vector<double>& zeta,
                             const std::vector<double>& values,
                             double target = -1.0);

FitResult fit_simex(const Dataset& data, LinkFunction link,
                    const SimexConfig& cfg, std::uint64_t seed);

// Subject indices (with replacement) of bootstrap resample `replicate_index`;
// shared by simex_bootstrap_se and its tests.
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed,
                                           std::size_t replicate_index);

// Componentwise SD of SIMEX estimates over n_boot subject resamples
// (replicate sets kept intact).  Failed resamples are dropped and counted;
// error if more than 10% fail.
Eigen::VectorXd simex_bootstrap_se(const Dataset& data, LinkFunction link,
                                   const SimexConfig& cfg, std::size_t n_boot,
                                   std::uint64_t seed);

}  // namespace modalme
