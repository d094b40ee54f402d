#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qscan/detect.hpp"
#include "qscan/types.hpp"

namespace qscan {

struct ParseOptions {
  double max_missing = 0.10;  // variants above this missing rate are dropped
};

struct ParseCounters {
  int64_t variants_kept = 0;
  int64_t dropped_missingness = 0;
  int64_t skipped_multiallelic = 0;  // VCF only
  int64_t skipped_symbolic = 0;      // VCF only
  std::vector<std::string> warnings;
};

struct ParsedGenotypes {
  GenotypeMatrix geno;
  ParseCounters counters;
};

// Dosage TSV: header "chrom pos id <sample...>"; data rows are chrom, pos,
// variant id, then one dosage in [0,2] or NA per sample. NA is mean-imputed
// unless the variant's missing rate exceeds max_missing (then the variant is
// dropped with a warning). Positions must be strictly increasing within a
// chromosome. Plain or gzip. Errors are ParseError with file:line.
ParsedGenotypes parse_dosage_tsv(const std::string& path, const ParseOptions& opt = {});

// Minimal VCF subset: biallelic SNVs with a GT field; 0/0, 0/1, 1/1 map to
// dosages 0, 1, 2; ./. is missing; '|' phasing is accepted and ignored.
// Multiallelic and symbolic-allele records are skipped with counters. A
// malformed GT (e.g. allele index beyond the single ALT) is a ParseError
// carrying the record's chrom/pos.
ParsedGenotypes parse_vcf_subset(const std::string& path, const ParseOptions& opt = {});

// Writers used for fixtures and round-trip checks. write_vcf_subset requires
// dosages within 1e-9 of {0,1,2}.
void write_dosage_tsv(const GenotypeMatrix& geno, const std::string& path);
void write_vcf_subset(const GenotypeMatrix& geno, const std::string& path);

struct PhenoCovar {
  PhenotypeVector pheno;
  CovariateMatrix covar;           // intercept prepended
  std::vector<std::string> sample_ids;  // aligned with pheno/covar rows
  std::vector<std::string> warnings;
};

// Phenotype/covariate TSV: header row, first column sample ID. Samples are
// intersected with genotype_samples and returned in genotype order; samples
// with a missing phenotype are dropped with a warning. Unknown column names
// raise ConfigError listing what is available.
PhenoCovar parse_pheno_covar(const std::string& path, const std::string& pheno_col,
                             const std::vector<std::string>& covar_cols,
                             const std::vector<std::string>& genotype_samples, Family family);

// Aligned analysis inputs: genotype rows subset/reordered to the common
// samples, MAF recomputed on the survivors.
struct DatasetBundle {
  GenotypeMatrix geno;
  PhenotypeVector pheno;
  CovariateMatrix covar;
  std::vector<std::string> sample_ids;
  std::vector<std::string> warnings;
};

DatasetBundle align_dataset(const GenotypeMatrix& geno, const PhenoCovar& pc);

// Flat key=value config files (# comments, blank lines ignored) for the
// simulate-* commands. Malformed lines and duplicate keys are ParseErrors;
// key-name validation happens in the consumer, which knows its schema.
std::map<std::string, std::string> parse_config_file(const std::string& path);

}  // namespace qscan
