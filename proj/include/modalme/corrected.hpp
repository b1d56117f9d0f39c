#pragma once

// Corrected objectives for error-prone covariates.  The per-record functions
// average the complex-argument log-likelihood / score over Monte-Carlo
// perturbations; CorrectedObjective is the batched whole-dataset evaluator
// that the optimizers drive (same quantities, vectorized kernels).

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "modalme/data.hpp"
#include "modalme/links.hpp"
#include "modalme/model.hpp"
#include "modalme/tvariates.hpp"

namespace modalme {

// (1/B) sum_b Re l(Omega; y, w_bar + i c_j T_b, x_rest) with
// c_j = sqrt((n_j-1) s2 / n_j); the exact naive likelihood when c_j = 0.
double corrected_loglik(const ModelParams& params, LinkFunction link,
                        const SurrogateRecord& record,
                        const std::vector<double>& t_row);

// Gradient of corrected_loglik in (beta, log m), same T draws.
Eigen::VectorXd corrected_score(const ModelParams& params, LinkFunction link,
                                const SurrogateRecord& record,
                                const std::vector<double>& t_row);

// No-replicate variant: (1/B) sum_b Re l(Omega; y, w + i Sigma_u^{1/2} z_b)
// with the symmetric PSD matrix square root.
double corrected_loglik_known_sigma(const ModelParams& params,
                                    LinkFunction link, double y,
                                    const Eigen::VectorXd& w,
                                    const Eigen::MatrixXd& sigma_u,
                                    const std::vector<Eigen::VectorXd>& z_row);

// Symmetric PSD square root; throws MatrixError if sigma is asymmetric or has
// an eigenvalue below -1e-10 (small negatives are clamped to zero).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma);

// Whole-dataset objective: value = sum over subjects of the (corrected or
// naive) log-likelihood; scores/Jacobian to match.  Construction freezes the
// Monte-Carlo perturbations, so the objective is deterministic thereafter.
class CorrectedObjective {
 public:
  static CorrectedObjective naive(const Dataset& data, LinkFunction link);
  static CorrectedObjective replicate(const Dataset& data, LinkFunction link,
                                      const TVariateSet& t);
  static CorrectedObjective known_sigma(const Dataset& data, LinkFunction link,
                                        const Eigen::MatrixXd& sigma_u,
                                        std::size_t B, std::mt19937_64& rng);

  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  int n_covariates() const { return p_; }
  int n_params() const { return p_ + 2; }
  LinkFunction link() const { return link_; }

  double value(const ModelParams& params) const;
  double value_and_gradient(const ModelParams& params,
                            Eigen::VectorXd& grad) const;
  Eigen::VectorXd gradient(const ModelParams& params) const;
  // Per-subject corrected scores, one row each (n x (p+2)).
  Eigen::MatrixXd scores(const ModelParams& params) const;
  // sum_j d Psi_j / d Omega^T, analytic ((p+2) x (p+2)).
  Eigen::MatrixXd score_jacobian_sum(const ModelParams& params) const;
  // Per-subject corrected two-component diagnostic scores (n x 2).
  Eigen::MatrixXd diag_scores(const ModelParams& params) const;

 private:
  struct Subject {
    double y, L1, L2;        // response and its logs
    Eigen::VectorXd x;       // real covariates (w_bar first)
    int offset = -1;         // first flat point index
    int B = 0;               // evaluation points for this subject
  };

  struct Workspace;

  CorrectedObjective(const Dataset& data, LinkFunction link);
  // Gives every subject still without points a single zero-direction point;
  // exact (naive-path) subjects then share the batched code path bitwise
  // with the corrected ones, so zero-variance reductions are exact.
  void finalize();
  // Fills the thread-local batch workspace with the arrays selected by
  // `flags` (see corrected.cpp) at the given parameters.
  Workspace& prepare(const ModelParams& params, unsigned flags) const;

  LinkFunction link_;
  int p_ = 0;
  std::vector<Subject> subjects_;
  std::vector<double> dirs_;  // imaginary directions, n_points x p_, row-major
  int n_points_ = 0;
};

}  // namespace modalme
