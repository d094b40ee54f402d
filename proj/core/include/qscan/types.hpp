#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qscan/errors.hpp"

namespace qscan {

enum class Family { gaussian, binomial };

inline const char* family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "binomial";
}

struct PhenotypeVector {
  Family family = Family::gaussian;
  std::vector<double> values;  // length n; binomial values are 0/1
};

// Covariate matrix with the intercept as column 0. Stored dense; q is small.
struct CovariateMatrix {
  Eigen::MatrixXd values;                 // n x q
  std::vector<std::string> column_names;  // length q, [0] == "intercept"
};

// One variant column, sparse over samples. Indices are sorted and unique;
// values are the nonzero dosages (fractional after mean imputation).
struct SparseCol {
  std::vector<int32_t> idx;
  std::vector<double> val;

  double sum() const {
    double s = 0;
    for (double v : val) s += v;
    return s;
  }
};

// Variant-major dosage matrix. Entries live in [0, 2]; zeros are implicit.
// Variants are ordered by (chromosome block, position); windows never cross
// a chromosome boundary.
struct GenotypeMatrix {
  int64_t n_samples = 0;
  std::vector<std::string> sample_ids;     // length n_samples
  std::vector<std::string> chrom_names;    // block id -> label
  std::vector<int32_t> chrom_id;           // per variant, index into chrom_names
  std::vector<int64_t> pos;                // per variant, strictly increasing per chrom
  std::vector<std::string> variant_ids;    // per variant
  std::vector<double> maf;                 // per variant, min(f, 1-f)
  std::vector<SparseCol> cols;             // per variant

  int64_t n_variants() const { return static_cast<int64_t>(cols.size()); }

  double allele_frequency(int64_t j) const {
    return n_samples > 0 ? cols[j].sum() / (2.0 * static_cast<double>(n_samples)) : 0.0;
  }

  double minor_allele_count(int64_t j) const {
    const double s = cols[j].sum();
    const double f = s / (2.0 * static_cast<double>(n_samples));
    return f <= 0.5 ? s : 2.0 * static_cast<double>(n_samples) - s;
  }

  void recompute_maf() {
    maf.resize(cols.size());
    for (int64_t j = 0; j < n_variants(); ++j) {
      const double f = allele_frequency(j);
      maf[j] = f <= 0.5 ? f : 1.0 - f;
    }
  }

  double dosage(int64_t sample, int64_t variant) const {
    const SparseCol& c = cols[variant];
    auto it = std::lower_bound(c.idx.begin(), c.idx.end(), static_cast<int32_t>(sample));
    if (it != c.idx.end() && *it == sample) return c.val[it - c.idx.begin()];
    return 0.0;
  }

  Eigen::VectorXd dense_col(int64_t variant) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_samples);
    const SparseCol& c = cols[variant];
    for (size_t k = 0; k < c.idx.size(); ++k) g[c.idx[k]] = c.val[k];
    return g;
  }

  void set_col_from_dense(int64_t variant, const std::vector<double>& dense) {
    SparseCol c;
    for (int32_t i = 0; i < static_cast<int32_t>(dense.size()); ++i) {
      if (dense[i] != 0.0) {
        c.idx.push_back(i);
        c.val.push_back(dense[i]);
      }
    }
    cols[variant] = std::move(c);
  }

  // Keep only the given sample rows (order defines the new sample order).
  GenotypeMatrix subset_rows(const std::vector<int64_t>& rows) const;

  // Contiguous [begin, end) variant ranges per chromosome.
  std::vector<std::pair<int64_t, int64_t>> chrom_blocks() const {
    std::vector<std::pair<int64_t, int64_t>> blocks;
    int64_t p = n_variants();
    int64_t start = 0;
    for (int64_t j = 1; j <= p; ++j) {
      if (j == p || chrom_id[j] != chrom_id[start]) {
        blocks.emplace_back(start, j);
        start = j;
      }
    }
    return blocks;
  }

  void validate() const;  // dimension and ordering checks, throws on failure
};

// filter_variants output: the retained matrix plus the mapping from its
// columns back to the input's column indices.
struct FilterResult {
  GenotypeMatrix geno;
  std::vector<int64_t> kept;
};

FilterResult filter_variants(const GenotypeMatrix& geno, double maf_max, double mac_min);

}  // namespace qscan
