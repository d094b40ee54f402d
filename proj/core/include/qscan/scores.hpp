#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qscan/banded.hpp"
#include "qscan/null_model.hpp"
#include "qscan/types.hpp"

namespace qscan {

// Per-variant score statistics plus the banded covariance estimate, i.e.
// everything the scan needs; genotypes and phenotypes can be dropped after
// this is built. Rows are the retained (positive-variance) variants;
// variant_index maps back to the genotype matrix the set was built from.
struct ScoreSet {
  std::vector<double> u;                // length p
  BandedMatrix cov;                     // p x p, bandwidth l_max - 1
  std::vector<int64_t> variant_index;   // retained -> source column
  std::vector<int32_t> chrom_id;        // per retained variant
  std::vector<int64_t> pos;             // per retained variant
  std::vector<std::string> chrom_names;
  int64_t n_samples = 0;
  int64_t dropped_zero_variance = 0;

  int64_t size() const { return static_cast<int64_t>(u.size()); }
  std::vector<std::pair<int64_t, int64_t>> chrom_blocks() const;
};

// U_j = G_j' residuals / (a(phi_hat) sqrt(n)) for every variant, retained or
// not. Monomorphic columns give exactly 0.
std::vector<double> compute_scores(const GenotypeMatrix& geno, const NullModel& model);

// Banded covariance of the scores, entries Sigma_jk for |j-k| <= bandwidth:
//   Sigma_jk = (G_j' Lambda G_k - a_j' (X'Lambda X) a_k) / (a(phi_hat)^2 n),
//   a_j = (X'Lambda X)^-1 X' Lambda G_j,
// which is the covariance of the adjusted genotypes
// G~_j = G_j - X a_j under the Lambda inner product. Pairs on different
// chromosomes are zero by contract.
BandedMatrix compute_banded_cov(const GenotypeMatrix& geno, const NullModel& model,
                                int64_t bandwidth);

// Builds the full ScoreSet: computes diagonals first, drops variants whose
// post-projection variance is numerically zero (monomorphic or collinear with
// covariates), then fills scores and the band over the retained set.
ScoreSet make_score_set(const GenotypeMatrix& geno, const NullModel& model, int64_t bandwidth);

// Binary cache (little-endian, layout documented in the README) so scan and
// threshold runs can share one expensive scores pass.
void save_score_set(const ScoreSet& s, const std::string& path);
ScoreSet load_score_set(const std::string& path);

}  // namespace qscan
