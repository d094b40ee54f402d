#include "qscan/null_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

namespace qscan {

namespace {

constexpr double kIrlsTol = 1e-8;
constexpr int kIrlsMaxIter = 25;
constexpr double kMeanFloor = 1e-10;  // fitted binomial means outside
                                      // [floor, 1-floor] indicate separation

std::string column_label(const CovariateMatrix& x, Eigen::Index j) {
  if (j < static_cast<Eigen::Index>(x.column_names.size())) return x.column_names[j];
  return "column " + std::to_string(j);
}

// Rank check via column-pivoted QR; names the first column that adds no new
// direction so the error is actionable.
void check_full_rank(const CovariateMatrix& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.values);
  qr.setThreshold(1e-10);
  if (qr.rank() == x.values.cols()) return;
  // Re-run a greedy QR by hand to find the offending column in input order.
  const Eigen::Index n = x.values.rows();
  Eigen::MatrixXd basis(n, x.values.cols());
  Eigen::Index got = 0;
  for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
    Eigen::VectorXd v = x.values.col(j);
    const double norm0 = v.norm();
    for (Eigen::Index b = 0; b < got; ++b) v -= basis.col(b).dot(v) * basis.col(b);
    if (v.norm() <= 1e-10 * std::max(1.0, norm0)) {
      throw SingularDesignError("covariate matrix is rank deficient: " + column_label(x, j) +
                                " is linearly dependent on earlier columns");
    }
    basis.col(got++) = v / v.norm();
  }
  throw SingularDesignError("covariate matrix is rank deficient");
}

void check_dimensions(const PhenotypeVector& y, const CovariateMatrix& x) {
  const int64_t n = static_cast<int64_t>(y.values.size());
  if (x.values.rows() != n) {
    throw DimensionError("phenotype has " + std::to_string(n) + " samples but covariates have " +
                         std::to_string(x.values.rows()) + " rows");
  }
  if (n == 0) throw DimensionError("empty phenotype");
  if (x.values.cols() == 0) throw DimensionError("covariate matrix has no columns");
  if (n <= x.values.cols()) {
    throw DimensionError("need more samples than covariates (n=" + std::to_string(n) +
                         ", q=" + std::to_string(x.values.cols()) + ")");
  }
}

NullModel fit_gaussian(const PhenotypeVector& y, const CovariateMatrix& x) {
  const Eigen::Index n = x.values.rows();
  Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), n);

  Eigen::LDLT<Eigen::MatrixXd> xtx(x.values.transpose() * x.values);
  Eigen::VectorXd alpha = xtx.solve(x.values.transpose() * yv);
  Eigen::VectorXd eta = x.values * alpha;
  Eigen::VectorXd resid = yv - eta;

  const double rss = resid.squaredNorm();
  const double phi = rss / static_cast<double>(n);  // MLE divisor n
  const double y_scale = std::max(1.0, yv.squaredNorm() / static_cast<double>(n));
  if (!(phi > 1e-12 * y_scale)) {
    throw DegenerateVarianceError("gaussian phenotype is (numerically) constant given the "
                                  "covariates; residual variance is zero");
  }

  NullModel m;
  m.family = Family::gaussian;
  m.alpha_hat = std::move(alpha);
  m.eta_hat = std::move(eta);
  m.weights = Eigen::VectorXd::Constant(n, phi);
  m.dispersion = phi;
  m.residuals = std::move(resid);
  // X'Lambda X = phi * X'X
  m.xtwx_inv = xtx.solve(Eigen::MatrixXd::Identity(x.values.cols(), x.values.cols())) / phi;
  m.covariates = x.values;
  return m;
}

NullModel fit_binomial(const PhenotypeVector& y, const CovariateMatrix& x) {
  const Eigen::Index n = x.values.rows();
  const Eigen::Index q = x.values.cols();
  Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), n);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (yv[i] != 0.0 && yv[i] != 1.0) {
      throw FormatError("binomial phenotype must be 0/1; sample " + std::to_string(i) + " has " +
                        std::to_string(yv[i]));
    }
  }
  const double ybar = yv.mean();
  if (ybar <= 0.0 || ybar >= 1.0) {
    throw SeparationError("binomial phenotype has a single class; cannot fit the null model");
  }

  // IRLS with logit link, started from the intercept-only fit.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(q);
  alpha[0] = std::log(ybar / (1.0 - ybar));
  Eigen::VectorXd mu(n), w(n);
  std::vector<double> trace;
  int iter = 0;
  for (; iter < kIrlsMaxIter; ++iter) {
    Eigen::VectorXd lin = x.values * alpha;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = 1.0 / (1.0 + std::exp(-lin[i]));
      mu[i] = e;
      w[i] = e * (1.0 - e);
    }
    // Newton step on the canonical score: X'(y - mu) with information X'WX.
    Eigen::MatrixXd xtwx = x.values.transpose() * w.asDiagonal() * x.values;
    Eigen::VectorXd score = x.values.transpose() * (yv - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw SeparationError("binomial working information is singular (quasi-separation)");
    }
    Eigen::VectorXd step = ldlt.solve(score);
    alpha += step;
    const double delta = step.cwiseAbs().maxCoeff();
    trace.push_back(delta);
    if (delta <= kIrlsTol) {
      ++iter;
      break;
    }
  }
  if (trace.empty() || trace.back() > kIrlsTol) {
    throw ConvergenceError("binomial IRLS did not converge within " +
                           std::to_string(kIrlsMaxIter) + " iterations",
                           trace);
  }

  Eigen::VectorXd lin = x.values * alpha;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = 1.0 / (1.0 + std::exp(-lin[i]));
    mu[i] = e;
    w[i] = e * (1.0 - e);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mu[i] < kMeanFloor || mu[i] > 1.0 - kMeanFloor) {
      throw SeparationError("fitted mean for sample " + std::to_string(i) +
                            " is pinned at the boundary (complete or quasi separation)");
    }
  }

  NullModel m;
  m.family = Family::binomial;
  m.alpha_hat = std::move(alpha);
  m.eta_hat = mu;
  m.weights = w;
  m.dispersion = 1.0;
  m.residuals = yv - mu;
  Eigen::MatrixXd xtwx = x.values.transpose() * w.asDiagonal() * x.values;
  m.xtwx_inv = Eigen::LDLT<Eigen::MatrixXd>(xtwx).solve(Eigen::MatrixXd::Identity(q, q));
  m.covariates = x.values;
  m.irls_iterations = iter;
  return m;
}

}  // namespace

NullModel fit_null_model(const PhenotypeVector& y, const CovariateMatrix& x) {
  check_dimensions(y, x);
  check_full_rank(x);
  return y.family == Family::gaussian ? fit_gaussian(y, x) : fit_binomial(y, x);
}

}  // namespace qscan
