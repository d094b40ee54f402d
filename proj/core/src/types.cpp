#include "qscan/types.hpp"

#include <cmath>
#include <unordered_map>

namespace qscan {

// ---------- GenotypeMatrix ----------

GenotypeMatrix GenotypeMatrix::subset_rows(const std::vector<int64_t>& rows) const {
  GenotypeMatrix out;
  out.n_samples = static_cast<int64_t>(rows.size());
  out.sample_ids.reserve(rows.size());
  for (int64_t r : rows) {
    if (r < 0 || r >= n_samples) throw DimensionError("subset_rows: row index out of range");
    out.sample_ids.push_back(sample_ids.empty() ? std::string() : sample_ids[r]);
  }
  out.chrom_names = chrom_names;
  out.chrom_id = chrom_id;
  out.pos = pos;
  out.variant_ids = variant_ids;

  // old row -> new row; later duplicates win is not meaningful here, so the
  // mapping is only valid for duplicate-free row lists (callers guarantee it).
  std::vector<int64_t> new_row(static_cast<size_t>(n_samples), -1);
  for (size_t k = 0; k < rows.size(); ++k) new_row[rows[k]] = static_cast<int64_t>(k);

  out.cols.resize(cols.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    const SparseCol& c = cols[j];
    std::vector<std::pair<int32_t, double>> picked;
    for (size_t k = 0; k < c.idx.size(); ++k) {
      const int64_t nr = new_row[c.idx[k]];
      if (nr >= 0) picked.emplace_back(static_cast<int32_t>(nr), c.val[k]);
    }
    std::sort(picked.begin(), picked.end());
    SparseCol& oc = out.cols[j];
    oc.idx.reserve(picked.size());
    oc.val.reserve(picked.size());
    for (auto& [i, v] : picked) {
      oc.idx.push_back(i);
      oc.val.push_back(v);
    }
  }
  out.recompute_maf();
  return out;
}

void GenotypeMatrix::validate() const {
  const int64_t p = n_variants();
  if (static_cast<int64_t>(chrom_id.size()) != p || static_cast<int64_t>(pos.size()) != p ||
      static_cast<int64_t>(variant_ids.size()) != p || static_cast<int64_t>(maf.size()) != p) {
    throw DimensionError("genotype matrix: per-variant arrays disagree on length");
  }
  if (!sample_ids.empty() && static_cast<int64_t>(sample_ids.size()) != n_samples) {
    throw DimensionError("genotype matrix: sample id count != n_samples");
  }
  for (int64_t j = 0; j < p; ++j) {
    if (chrom_id[j] < 0 || chrom_id[j] >= static_cast<int32_t>(chrom_names.size())) {
      throw DimensionError("genotype matrix: chromosome id out of range at variant " +
                           std::to_string(j));
    }
    if (j > 0 && chrom_id[j] == chrom_id[j - 1] && pos[j] <= pos[j - 1]) {
      throw FormatError("genotype matrix: positions not strictly increasing at variant " +
                        std::to_string(j));
    }
    const SparseCol& c = cols[j];
    if (c.idx.size() != c.val.size()) {
      throw DimensionError("genotype matrix: sparse column arrays disagree at variant " +
                           std::to_string(j));
    }
    for (size_t k = 0; k < c.idx.size(); ++k) {
      if (c.idx[k] < 0 || c.idx[k] >= n_samples) {
        throw DimensionError("genotype matrix: sample index out of range at variant " +
                             std::to_string(j));
      }
      if (k > 0 && c.idx[k] <= c.idx[k - 1]) {
        throw FormatError("genotype matrix: sparse indices not sorted at variant " +
                          std::to_string(j));
      }
      if (!(c.val[k] >= 0.0 && c.val[k] <= 2.0)) {
        throw FormatError("genotype matrix: dosage outside [0,2] at variant " + std::to_string(j));
      }
    }
  }
}

// ---------- variant filter ----------

FilterResult filter_variants(const GenotypeMatrix& geno, double maf_max, double mac_min) {
  if (!(maf_max > 0.0 && maf_max <= 0.5)) {
    throw ConfigError("filter_variants: maf_max must be in (0, 0.5]");
  }
  if (mac_min < 0.0) throw ConfigError("filter_variants: mac_min must be >= 0");

  FilterResult out;
  out.geno.n_samples = geno.n_samples;
  out.geno.sample_ids = geno.sample_ids;
  out.geno.chrom_names = geno.chrom_names;

  const int64_t p = geno.n_variants();
  for (int64_t j = 0; j < p; ++j) {
    const double f = geno.allele_frequency(j);
    const double maf = f <= 0.5 ? f : 1.0 - f;
    const double mac = geno.minor_allele_count(j);
    if (maf <= 0.0 || maf > maf_max || mac < mac_min) continue;
    out.kept.push_back(j);
    out.geno.chrom_id.push_back(geno.chrom_id[j]);
    out.geno.pos.push_back(geno.pos[j]);
    out.geno.variant_ids.push_back(geno.variant_ids[j]);
    out.geno.maf.push_back(maf);
    out.geno.cols.push_back(geno.cols[j]);
  }
  if (out.kept.empty()) {
    throw NoVariantsError("no variants pass the MAF/MAC filter (maf_max=" +
                          std::to_string(maf_max) + ", mac_min=" + std::to_string(mac_min) + ")");
  }
  return out;
}

}  // namespace qscan
