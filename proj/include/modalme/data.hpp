#pragma once

// Observed-data records: response, replicated surrogates of the error-prone
// covariate, and error-free covariates, plus the replicate-based estimate of
// the measurement-error variance.

#include <Eigen/Dense>
#include <vector>

#include "modalme/errors.hpp"

namespace modalme {

struct SurrogateRecord {
  double y = 0.5;                   // response in (0,1)
  std::vector<double> w;            // replicate surrogates of x1, n_j >= 1
  Eigen::VectorXd x_rest;           // error-free covariates (may be empty)

  int n_rep() const { return static_cast<int>(w.size()); }

  double w_bar() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s / static_cast<double>(w.size());
  }

  // Sample variance of the replicates (divisor n_j - 1); 0 when n_j = 1.
  // Exactly zero for identical replicates (the mean can round off a ulp).
  double s2() const {
    const int n = n_rep();
    if (n < 2) return 0.0;
    bool all_same = true;
    for (double v : w) all_same = all_same && v == w.front();
    if (all_same) return 0.0;
    const double wb = w_bar();
    double ss = 0.0;
    for (double v : w) ss += (v - wb) * (v - wb);
    return ss / static_cast<double>(n - 1);
  }

  // Scale of the imaginary perturbation: sqrt((n_j-1) s2 / n_j).
  double imag_scale() const {
    const int n = n_rep();
    if (n < 2) return 0.0;
    return std::sqrt((n - 1) * s2() / static_cast<double>(n));
  }

  // Covariates with w_bar substituted for x1.
  Eigen::VectorXd naive_x() const {
    Eigen::VectorXd x(1 + x_rest.size());
    x(0) = w_bar();
    x.tail(x_rest.size()) = x_rest;
    return x;
  }
};

using Dataset = std::vector<SurrogateRecord>;

// Throws on non-finite fields, empty replicate lists, responses outside
// (0,1), or covariate-length mismatches across subjects.
void validate_dataset(const Dataset& data);

// Replicate-based variance of the error in W-bar: n^-1 sum_j S_j^2 / n_j.
// Throws NoReplicatesError when no subject has n_j >= 2.
double estimate_sigma_u2(const Dataset& data);

}  // namespace modalme
