#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qscan/scan.hpp"
#include "qscan/scores.hpp"

namespace qscan {

enum class McMode { genotype_projection, banded_cholesky };

inline const char* mc_mode_name(McMode m) {
  return m == McMode::genotype_projection ? "genotype_projection" : "banded_cholesky";
}

struct ThresholdConfig {
  int64_t n_reps = 2000;
  double alpha = 0.05;
  uint64_t seed = 1;
  McMode mode = McMode::genotype_projection;
  int threads = 1;

  void validate() const;  // alpha in (0,1), n_reps >= ceil(1/alpha)
};

struct ThresholdResult {
  double h = 0.0;
  std::vector<double> max_samples;  // sorted ascending, one per replicate
  double alpha = 0.0;
  int64_t n_reps = 0;
  McMode mode = McMode::genotype_projection;
  double bound_upper = 0.0;  // theoretical_bound at the same settings
  double rate = 0.0;         // sqrt(2 log p)
  std::vector<std::string> notes;  // e.g. the cholesky jitter/fallback path
};

// Pseudo-score machinery for one dataset: either exact projection through the
// adjusted genotypes (needs geno+model) or sampling from the banded Cholesky
// factor of the score covariance. Replicate r always consumes Rng stream
// (seed, r), so samples are independent of thread count and schedule.
class PseudoScoreSampler {
public:
  // genotype_projection: U~_j = (G_j'w - a_j'(X'w)) / (a(phi_hat) sqrt(n)),
  // w = Lambda^{1/2} z; covariance is exactly the untruncated score
  // covariance.
  PseudoScoreSampler(const GenotypeMatrix& geno, const NullModel& model, const ScoreSet& scores);

  // banded_cholesky: U~ = L z from the banded factor; covariance matches the
  // band exactly and is zero beyond it. If the band is not positive definite
  // a one-time diagonal jitter of 1e-8 * max diag is applied; if that also
  // fails and genotypes are available the sampler falls back to projection
  // (recorded in notes), otherwise it throws NotPositiveDefiniteError.
  PseudoScoreSampler(const ScoreSet& scores, const GenotypeMatrix* fallback_geno,
                     const NullModel* fallback_model);

  void draw(uint64_t seed, uint64_t replicate, std::vector<double>& u_out) const;

  McMode effective_mode() const { return mode_; }
  const std::vector<std::string>& notes() const { return notes_; }

private:
  void build_projection(const GenotypeMatrix& geno, const NullModel& model);

  McMode mode_ = McMode::genotype_projection;
  std::vector<std::string> notes_;
  int64_t p_ = 0;
  // projection state
  int64_t n_ = 0;
  std::vector<double> sqrt_weights_;        // n
  std::vector<const SparseCol*> cols_;      // p (borrowed from geno)
  std::vector<double> proj_coef_;           // p x q, a_j row-major
  Eigen::MatrixXd x_;                       // n x q
  double inv_scale_sqrt_n_ = 1.0;           // 1/(a(phi_hat) sqrt(n))
  // cholesky state
  BandedMatrix factor_;
};

// Monte Carlo family-wise threshold: h is the k-th smallest of n_reps max
// statistics, k = ceil(n_reps * (1 - alpha)). geno/model may be null when
// mode is banded_cholesky (then no fallback is possible).
ThresholdResult mc_threshold(const ScoreSet& scores, const GenotypeMatrix* geno,
                             const NullModel* model, const ScanConfig& scan_cfg,
                             const ThresholdConfig& cfg);

// Max statistics of n_reps pseudo-score replicates against prebuilt window
// tables. qmax[r] (and mmax[r] when requested; the tables must carry mscan)
// come from Rng stream (seed, r); parallel over replicates, deterministic by
// stream. Shared with the simulation experiments.
void mc_max_samples(const PseudoScoreSampler& sampler, const detail::WindowTables& tables,
                    int64_t n_reps, uint64_t seed, int threads, std::vector<double>* qmax,
                    std::vector<double>* mmax);

// Conservative-order-statistic empirical quantile used above.
double mc_quantile(std::vector<double> samples, double alpha);

// Closed-form upper bound for the alpha-level threshold:
//   gamma = log(p * (l_max - l_min)) - log(alpha)
//   bound = sqrt(2 gamma) + sqrt(2) gamma / (l_min * log p)^(1/4)
double theoretical_bound(double p, int64_t l_min, int64_t l_max, double alpha);

// Growth rate of the null maximum: sqrt(2 log p).
double asymptotic_rate(double p);

}  // namespace qscan
