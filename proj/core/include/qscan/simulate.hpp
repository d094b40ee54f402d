#pragma once

#include <cstdint>
#include <vector>

#include "qscan/evaluate.hpp"
#include "qscan/types.hpp"

namespace qscan {

// Surrogate LD genotype model: haplotypes are blocks of correlated rare
// alleles (Gaussian copula thresholded at each variant's MAF quantile, latent
// lag-1 correlation calibrated per adjacent pair so the allele-level lag-1
// correlation is ld_rho wherever the two MAFs admit it), paired into diploid
// dosages. A pure function of (n, p, seed).
struct LdGenotypeModel {
  int64_t n_haplotypes = 0;  // haplotype pool size; 0 means 2n
  double maf_min = 0.0;      // 0 means 0.5/n (one expected carrier chromosome)
  double maf_max = 0.05;     // MAF law: log-uniform on [maf_min, maf_max]
  double ld_rho = 0.5;       // lag-1 allele correlation within a block
  int64_t block_len = 100;   // variants per independent LD block
};

GenotypeMatrix generate_genotypes(const LdGenotypeModel& model, int64_t n, int64_t p,
                                  uint64_t seed);

// Signal planting: disjoint regions with at least min_gap variants strictly
// between any two (keep min_gap > l_max so no scan window straddles regions),
// region lengths uniform on [region_len_min, region_len_max]; within a region
// of p0 variants, s = round(p0^xi) causal variants are drawn uniformly
// (xi = 1 marks every variant, and in particular the region edges, causal).
// Effect sizes beta_i = sign_i * |effect_c * log10(maf_i)| with
// P(sign_i = +1) = sign_mix.
struct SignalSpec {
  int n_regions = 2;
  int64_t region_len_min = 50;
  int64_t region_len_max = 80;
  int64_t min_gap = 201;
  double xi = 2.0 / 3.0;
  double effect_c = 0.185;
  double sign_mix = 1.0;  // fraction of positive signs
};

struct PlantedSignal {
  std::vector<Interval> regions;       // variant-index intervals
  std::vector<int64_t> causal;         // causal variant indices, ascending
  std::vector<double> beta;            // aligned with causal
};

PlantedSignal plant_signals(const GenotypeMatrix& geno, const SignalSpec& spec, uint64_t seed);

// Continuous phenotypes: Y = 0.5 X1 + 0.5 X2 + sum_c G_c beta_c + eps,
// X1 ~ N(0,1), X2 ~ Bernoulli(0.5), eps ~ N(0,1). Returns the phenotype and
// the covariate matrix (intercept, X1, X2). The null model is beta = empty.
struct ContinuousSample {
  PhenotypeVector pheno;
  CovariateMatrix covar;
};

ContinuousSample simulate_continuous(const GenotypeMatrix& geno, const std::vector<int64_t>& causal,
                                     const std::vector<double>& beta, uint64_t seed);

// Binary phenotypes under case-control sampling: geno is a source population
// (callers size it ~120x the case count for ~1% prevalence); case status is
// drawn from logit P(Y=1) = intercept + 0.5 X1 + 0.5 X2 + sum_c G_c beta_c,
// then exactly n_cases cases and n_controls controls are sampled. rows maps
// the returned samples back to population rows (ascending) so genotypes can
// be aligned with subset_rows. One internal redraw is attempted before
// SamplingError.
struct BinarySample {
  PhenotypeVector pheno;
  CovariateMatrix covar;
  std::vector<int64_t> rows;
};

BinarySample simulate_binary(const GenotypeMatrix& geno, const std::vector<int64_t>& causal,
                             const std::vector<double>& beta, int64_t n_cases, int64_t n_controls,
                             uint64_t seed, double logit_intercept = -4.6);

}  // namespace qscan
