#pragma once

// Mode-parameterized beta regression model: mode function, log-likelihood,
// ML scores and their Jacobian, the diagnostic moment score, and response
// sampling.  Every evaluation is available at real covariates and, through
// the overloads taking a complex first covariate, on the complex strip used
// by the corrected objectives.

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "modalme/complex_special.hpp"
#include "modalme/errors.hpp"
#include "modalme/links.hpp"

namespace modalme {

struct ModelParams {
  Eigen::VectorXd beta;  // intercept first
  double log_m = 0.0;

  double m() const { return std::exp(log_m); }
  int dim() const { return static_cast<int>(beta.size()) + 1; }

  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd v(dim());
    v.head(beta.size()) = beta;
    v(beta.size()) = log_m;
    return v;
  }
  static ModelParams from_vector(const Eigen::VectorXd& v) {
    ModelParams p;
    p.beta = v.head(v.size() - 1);
    p.log_m = v(v.size() - 1);
    return p;
  }
};

struct Observation {
  double y = 0.5;
  Eigen::VectorXd x;  // true covariates, without the intercept
};

// theta = g(beta^T (1, x)).
double mode_theta(const ModelParams& params, LinkFunction link,
                  const Eigen::VectorXd& x);
cplx mode_theta(const ModelParams& params, LinkFunction link,
                const Eigen::VectorXcd& x);

// (alpha1, alpha2) = (1 + m*theta, 1 + m*(1-theta)).
std::pair<double, double> beta_shape(double theta, double m);
std::pair<cplx, cplx> beta_shape(cplx theta, double m);

double log_likelihood(const ModelParams& params, LinkFunction link,
                      const Observation& obs);
cplx log_likelihood(const ModelParams& params, LinkFunction link, double y,
                    const Eigen::VectorXcd& x);

// Stacked d/d(beta) and d/d(log m) of the log-likelihood (log-scale
// precision gradient; pass log_scale = false for d/dm).
Eigen::VectorXd score(const ModelParams& params, LinkFunction link,
                      const Observation& obs, bool log_scale = true);
Eigen::VectorXcd score(const ModelParams& params, LinkFunction link, double y,
                       const Eigen::VectorXcd& x, bool log_scale = true);

// d(score)/d(beta, log m)^T, analytic.
Eigen::MatrixXd score_jacobian(const ModelParams& params, LinkFunction link,
                               const Observation& obs);
Eigen::MatrixXcd score_jacobian(const ModelParams& params, LinkFunction link,
                                double y, const Eigen::VectorXcd& x);

// Two-component moment score matching log V and V log V with their beta
// expectations; zero mean under a correctly specified model.
Eigen::Vector2d diag_score_S(const ModelParams& params, LinkFunction link,
                             const Observation& obs);
Eigen::Vector2cd diag_score_S(const ModelParams& params, LinkFunction link,
                              double y, const Eigen::VectorXcd& x);

// One draw from beta(1 + m*theta, 1 + m*(1-theta)).
double sample_response(double theta, double m, std::mt19937_64& rng);

}  // namespace modalme
