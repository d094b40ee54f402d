#pragma once

#include <Eigen/Dense>

#include "qscan/types.hpp"

namespace qscan {

// Fitted covariate-only GLM. Downstream score and covariance computations use
// the information-form quantities:
//   Lambda  = diag(a_i(phi_hat) * v(eta_hat_i))   (gaussian: phi_hat,
//                                                  binomial: eta(1-eta))
//   xtwx_inv = (X' Lambda X)^-1
//   score_scale = a(phi_hat)  (gaussian: phi_hat, binomial: 1)
// so that U_j = G_j' residuals / (score_scale * sqrt(n)) has variance
// G_j'(Lambda - Lambda X xtwx_inv X' Lambda)G_j / (score_scale^2 * n).
struct NullModel {
  Family family = Family::gaussian;
  Eigen::VectorXd alpha_hat;   // q coefficients
  Eigen::VectorXd eta_hat;     // n fitted means (response scale)
  Eigen::VectorXd weights;     // n, diagonal of Lambda
  double dispersion = 1.0;     // phi_hat (gaussian MLE RSS/n; binomial 1)
  Eigen::VectorXd residuals;   // Y - eta_hat
  Eigen::MatrixXd xtwx_inv;    // q x q, (X' Lambda X)^-1
  Eigen::MatrixXd covariates;  // X itself (n x q), kept for score projection
  int irls_iterations = 0;

  double score_scale() const { return family == Family::gaussian ? dispersion : 1.0; }
  int64_t n_samples() const { return eta_hat.size(); }
};

// Fits the null GLM of Y on X (intercept must be X's first column; callers
// building X by hand can use CovariateMatrix helpers in io.hpp).
// gaussian: ordinary least squares, phi_hat = RSS/n (MLE divisor).
// binomial: logit-link IRLS, converged when max |delta alpha| <= 1e-8,
//           at most 25 iterations.
// Throws SingularDesignError (rank-deficient X, names a dependent column),
// DegenerateVarianceError (gaussian Y essentially constant),
// SeparationError (binomial fitted means pinned to 0 or 1),
// ConvergenceError (IRLS ran out of iterations; carries the trace).
NullModel fit_null_model(const PhenotypeVector& y, const CovariateMatrix& x);

}  // namespace qscan
