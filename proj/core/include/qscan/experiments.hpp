#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qscan/scan.hpp"
#include "qscan/simulate.hpp"
#include "qscan/threshold.hpp"

namespace qscan {

// Shared experiment settings. Each replicate r generates its own dataset from
// Rng streams derived from (seed, r), fits the null model, builds scores, and
// calibrates its own Monte Carlo threshold, exactly as a real analysis would.
struct ExperimentConfig {
  int64_t n = 1000;        // samples (binomial: cases + controls, equal split)
  int64_t p = 20000;       // generated variants
  int64_t replicates = 500;
  int64_t mc_reps = 500;   // threshold replicates inside each experiment replicate
  std::vector<double> alphas = {0.05, 0.01};
  int64_t l_min = 40;
  int64_t l_max = 200;
  Family family = Family::gaussian;
  LdGenotypeModel ld;
  double maf_max = 0.05;
  double mac_min = 1.0;
  McMode mode = McMode::genotype_projection;
  uint64_t seed = 1;
  int threads = 1;
  // methods the FWER experiment calibrates (power always runs both)
  std::vector<Method> methods = {Method::qscan, Method::mscan};
  // binomial only
  double logit_intercept = -4.6;
  int64_t population_multiplier = 120;
  // called after each finished replicate with (done, total); long runs use it
  // for liveness reporting, leave empty for silence
  std::function<void(int64_t, int64_t)> progress;
};

struct FwerCell {
  Method method = Method::qscan;
  double alpha = 0.0;
  int64_t replicates = 0;
  int64_t rejections = 0;
  double fwer = 0.0;
  double target_lo = 0.0;  // binomial 95% interval around alpha
  double target_hi = 0.0;
};

struct FwerResult {
  std::vector<FwerCell> cells;  // qscan then mscan, per alpha
};

// Null-model FWER calibration: no signals planted; a replicate counts as a
// rejection when any window exceeds its threshold.
FwerResult fwer_experiment(const ExperimentConfig& cfg);

struct PowerConfig {
  ExperimentConfig base;
  SignalSpec signal;
  double alpha = 0.05;
  // When > 0, per-replicate effect rescaling so that
  // ||mu_I||_2^2 / ||lambda_I||_2 = condition_target * sqrt(log p) for the
  // first planted region (single-region consistency experiments).
  double condition_target = 0.0;
};

struct PowerRow {
  Method method = Method::qscan;
  double detection_rate = 0.0;
  double jaccard = 0.0;
  double se_detection = 0.0;
  double se_jaccard = 0.0;
  int64_t replicates = 0;
};

struct PowerResult {
  std::vector<PowerRow> rows;  // qscan, mscan
  // Per-replicate metrics, aligned across methods for paired comparisons.
  std::vector<double> detection_q, detection_m;
  std::vector<double> jaccard_q, jaccard_m;
  // Realized condition ratio ||mu||^2/||lambda||_2 / sqrt(log p), first region.
  std::vector<double> condition_ratio;
};

PowerResult power_experiment(const PowerConfig& cfg);

// One-sided paired comparison (mean of q-m differences > 0): returns the
// normal-approximation p-value.
double paired_one_sided_pvalue(const std::vector<double>& q, const std::vector<double>& m);

}  // namespace qscan
