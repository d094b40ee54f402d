#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qscan/banded.hpp"
#include "qscan/detect.hpp"
#include "qscan/null_model.hpp"
#include "qscan/scan.hpp"
#include "qscan/scores.hpp"
#include "qscan/simulate.hpp"
#include "qscan/types.hpp"

// Reference implementations for the tests. Everything here recomputes results
// the slow and obvious way (dense Eigen algebra, per-window double loops,
// iterative selection) so the production paths have something independent to
// agree with.
namespace testutil {

// Dense score covariance: residualize the genotype columns against the
// covariates under the Lambda inner product, then Sigma = Gt' Lambda Gt
// scaled by 1/(a(phi)^2 n). No banding, no sparsity.
Eigen::MatrixXd dense_covariance(const qscan::GenotypeMatrix& geno,
                                 const qscan::NullModel& model);

// Dense scores U_j = G_j' r / (a(phi) sqrt(n)).
Eigen::VectorXd dense_scores(const qscan::GenotypeMatrix& geno, const qscan::NullModel& model);

// Q through an explicit symmetric eigendecomposition of the window block:
// (sum u^2 - sum lambda) / sqrt(2 sum lambda^2).
double eigen_q_stat(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& u);

// M through the dense quadratic form (sum u)^2 / (1' Sigma 1).
double dense_m_stat(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& u);

// Window block [s, e] of a banded matrix, densified.
Eigen::MatrixXd window_block(const qscan::BandedMatrix& cov, int64_t s, int64_t e);

// Random positive definite banded matrix, built as L L' from a random banded
// lower factor so it is genuinely inside the band. Optional blocks make it
// block diagonal (no coupling across block boundaries).
qscan::BandedMatrix random_psd_band(int64_t p, int64_t bw, uint64_t seed,
                                    const std::vector<std::pair<int64_t, int64_t>>& blocks = {});

// Synthetic ScoreSet over n_chrom equal chromosome blocks: standard normal
// scores, random PSD band, fake positions.
qscan::ScoreSet synthetic_score_set(int64_t p, int64_t bw, uint64_t seed, int n_chrom = 1);

// From-scratch window scan: per-window double loops over the band.
std::vector<qscan::WindowStat> brute_force_scan(const qscan::ScoreSet& scores,
                                                const qscan::ScanConfig& cfg,
                                                int64_t* skipped = nullptr);

// Literal greedy selection: repeatedly find the best remaining candidate,
// erase everything overlapping it.
std::vector<qscan::DetectedRegion> naive_detect(std::vector<qscan::WindowStat> cands);

// Two-sample Kolmogorov-Smirnov distance.
double two_sample_ks(std::vector<double> a, std::vector<double> b);

// Small end-to-end dataset: surrogate genotypes, null continuous phenotype,
// fitted gaussian model, MAF/MAC-filtered matrix and its score set.
struct Fixture {
  qscan::GenotypeMatrix geno;  // filtered
  std::vector<int64_t> kept;
  qscan::NullModel model;
  qscan::ScoreSet scores;
};

Fixture make_fixture(int64_t n, int64_t p, int64_t bandwidth, uint64_t seed,
                     double ld_rho = 0.5, double maf_min = 0.0);

// Hand-built single-chromosome genotype matrix from dense per-variant
// columns (values indexed [variant][sample]).
qscan::GenotypeMatrix geno_from_dense(const std::vector<std::vector<double>>& cols);

double mean_of(const std::vector<double>& v);
double variance_of(const std::vector<double>& v);  // divisor n-1

}  // namespace testutil
