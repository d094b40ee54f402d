#include "qscan/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "qscan/gzio.hpp"

namespace qscan {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int64_t parse_int(const std::string& s, const LineReader& r, const char* what) {
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(r.path(), r.line_number(), std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const LineReader& r, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(r.path(), r.line_number(), std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

// Shared by both genotype parsers: chromosome registry enforcing contiguity,
// position ordering, and the missingness policy.
class GenotypeAssembler {
public:
  GenotypeAssembler(int64_t n_samples, double max_missing)
      : n_(n_samples), max_missing_(max_missing) {}

  // dense holds dosages with NaN for missing entries
  void add_variant(const std::string& chrom, int64_t pos, const std::string& id,
                   const std::vector<double>& dense, const LineReader& r, ParseCounters& counters) {
    int32_t cid;
    const auto it = chrom_index_.find(chrom);
    if (it == chrom_index_.end()) {
      cid = static_cast<int32_t>(geno_.chrom_names.size());
      chrom_index_.emplace(chrom, cid);
      geno_.chrom_names.push_back(chrom);
    } else {
      cid = it->second;
      if (!geno_.chrom_id.empty() && geno_.chrom_id.back() != cid) {
        throw ParseError(r.path(), r.line_number(),
                         "variants of chromosome " + chrom + " are not contiguous");
      }
    }
    if (!geno_.chrom_id.empty() && geno_.chrom_id.back() == cid && geno_.pos.back() >= pos) {
      throw ParseError(r.path(), r.line_number(),
                       "positions must be strictly increasing within a chromosome (" +
                           std::to_string(geno_.pos.back()) + " then " + std::to_string(pos) + ")");
    }

    int64_t missing = 0;
    double observed_sum = 0.0;
    for (const double v : dense) {
      if (std::isnan(v)) {
        ++missing;
      } else {
        observed_sum += v;
      }
    }
    if (missing > 0 &&
        static_cast<double>(missing) > max_missing_ * static_cast<double>(n_)) {
      ++counters.dropped_missingness;
      counters.warnings.push_back("variant " + id + " dropped: " + std::to_string(missing) +
                                  " of " + std::to_string(n_) + " dosages missing");
      return;
    }
    const double mean =
        missing < n_ ? observed_sum / static_cast<double>(n_ - missing) : 0.0;

    SparseCol col;
    for (int64_t i = 0; i < n_; ++i) {
      const double v = std::isnan(dense[i]) ? mean : dense[i];
      if (v != 0.0) {
        col.idx.push_back(static_cast<int32_t>(i));
        col.val.push_back(v);
      }
    }
    geno_.chrom_id.push_back(cid);
    geno_.pos.push_back(pos);
    geno_.variant_ids.push_back(id);
    geno_.cols.push_back(std::move(col));
    ++counters.variants_kept;
  }

  GenotypeMatrix finish(std::vector<std::string> sample_ids) {
    geno_.n_samples = n_;
    geno_.sample_ids = std::move(sample_ids);
    geno_.recompute_maf();
    return std::move(geno_);
  }

private:
  int64_t n_;
  double max_missing_;
  GenotypeMatrix geno_;
  std::unordered_map<std::string, int32_t> chrom_index_;
};

void check_unique_samples(const std::vector<std::string>& ids, const LineReader& r) {
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (id.empty()) throw ParseError(r.path(), r.line_number(), "empty sample id in header");
    if (!seen.insert(id).second) {
      throw ParseError(r.path(), r.line_number(), "duplicate sample id '" + id + "'");
    }
  }
}

}  // namespace

ParsedGenotypes parse_dosage_tsv(const std::string& path, const ParseOptions& opt) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw ParseError(path, 1, "empty input");
  const std::vector<std::string> header = split_tabs(line);
  if (header.size() < 4 || header[0] != "chrom" || header[1] != "pos" || header[2] != "id") {
    throw ParseError(path, reader.line_number(),
                     "expected header 'chrom\\tpos\\tid\\t<sample...>' with at least one sample");
  }
  std::vector<std::string> samples(header.begin() + 3, header.end());
  check_unique_samples(samples, reader);
  const auto n = static_cast<int64_t>(samples.size());

  ParsedGenotypes out;
  GenotypeAssembler assembler(n, opt.max_missing);
  std::vector<double> dense(n);
  while (reader.next(line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (static_cast<int64_t>(fields.size()) != n + 3) {
      throw ParseError(path, reader.line_number(),
                       "expected " + std::to_string(n + 3) + " fields, got " +
                           std::to_string(fields.size()));
    }
    const int64_t pos = parse_int(fields[1], reader, "position");
    for (int64_t i = 0; i < n; ++i) {
      const std::string& f = fields[3 + i];
      if (f == "NA") {
        dense[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double v = parse_real(f, reader, "dosage");
      if (!(v >= 0.0 && v <= 2.0)) {
        throw ParseError(path, reader.line_number(), "dosage '" + f + "' outside [0, 2]");
      }
      dense[i] = v;
    }
    assembler.add_variant(fields[0], pos, fields[2], dense, reader, out.counters);
  }
  out.geno = assembler.finish(std::move(samples));
  return out;
}

namespace {

bool is_snv_allele(const std::string& a) {
  return a.size() == 1 && (a[0] == 'A' || a[0] == 'C' || a[0] == 'G' || a[0] == 'T');
}

// GT like 0/1, 1|1, ./.; returns dosage or NaN for missing.
double parse_gt(const std::string& field, const LineReader& r, const std::string& where) {
  const size_t colon = field.find(':');
  const std::string gt = colon == std::string::npos ? field : field.substr(0, colon);
  size_t sep = gt.find('/');
  if (sep == std::string::npos) sep = gt.find('|');
  if (sep == std::string::npos || sep == 0 || sep + 1 >= gt.size()) {
    throw ParseError(r.path(), r.line_number(), "malformed GT '" + gt + "' at " + where);
  }
  const std::string a = gt.substr(0, sep), b = gt.substr(sep + 1);
  const auto allele = [&](const std::string& s) -> int {
    if (s == ".") return -1;
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw ParseError(r.path(), r.line_number(),
                     "GT allele '" + s + "' at " + where + " is not 0, 1 or .");
  };
  const int av = allele(a), bv = allele(b);
  if (av < 0 || bv < 0) return std::numeric_limits<double>::quiet_NaN();
  return av + bv;
}

}  // namespace

ParsedGenotypes parse_vcf_subset(const std::string& path, const ParseOptions& opt) {
  LineReader reader(path);
  std::string line;
  std::vector<std::string> header;
  for (;;) {
    if (!reader.next(line)) throw ParseError(path, reader.line_number(), "no #CHROM header line");
    if (line.rfind("##", 0) == 0) continue;
    if (line.rfind("#CHROM", 0) == 0) {
      header = split_tabs(line);
      break;
    }
    throw ParseError(path, reader.line_number(), "expected ## or #CHROM line, got '" +
                                                     line.substr(0, 40) + "'");
  }
  static const char* kFixed[9] = {"#CHROM", "POS",    "ID",   "REF",  "ALT",
                                  "QUAL",   "FILTER", "INFO", "FORMAT"};
  if (header.size() < 10) {
    throw ParseError(path, reader.line_number(), "VCF needs the 9 fixed columns plus samples");
  }
  for (int i = 0; i < 9; ++i) {
    if (header[i] != kFixed[i]) {
      throw ParseError(path, reader.line_number(),
                       "column " + std::to_string(i + 1) + " must be " + kFixed[i]);
    }
  }
  std::vector<std::string> samples(header.begin() + 9, header.end());
  check_unique_samples(samples, reader);
  const auto n = static_cast<int64_t>(samples.size());

  ParsedGenotypes out;
  GenotypeAssembler assembler(n, opt.max_missing);
  std::vector<double> dense(n);
  while (reader.next(line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (static_cast<int64_t>(fields.size()) != n + 9) {
      throw ParseError(path, reader.line_number(),
                       "expected " + std::to_string(n + 9) + " fields, got " +
                           std::to_string(fields.size()));
    }
    const std::string& chrom = fields[0];
    const int64_t pos = parse_int(fields[1], reader, "POS");
    const std::string where = chrom + ":" + std::to_string(pos);
    if (fields[4].find(',') != std::string::npos) {
      ++out.counters.skipped_multiallelic;
      continue;
    }
    if (!is_snv_allele(fields[3]) || !is_snv_allele(fields[4])) {
      ++out.counters.skipped_symbolic;
      continue;
    }
    const std::vector<std::string> format = [&] {
      std::vector<std::string> keys;
      size_t start = 0;
      const std::string& fmt = fields[8];
      for (;;) {
        const size_t c = fmt.find(':', start);
        keys.push_back(fmt.substr(start, c - start));
        if (c == std::string::npos) return keys;
        start = c + 1;
      }
    }();
    if (format.empty() || format[0] != "GT") {
      throw ParseError(path, reader.line_number(), "FORMAT at " + where + " must start with GT");
    }
    for (int64_t i = 0; i < n; ++i) dense[i] = parse_gt(fields[9 + i], reader, where);
    const std::string id = fields[2] == "." ? where : fields[2];
    assembler.add_variant(chrom, pos, id, dense, reader, out.counters);
  }
  out.geno = assembler.finish(std::move(samples));
  return out;
}

namespace {

// Writer targeting either plain FILE or GzWriter by extension.
class TextSink {
public:
  explicit TextSink(const std::string& path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
      gz_ = std::make_unique<GzWriter>(path);
    } else {
      f_ = std::fopen(path.c_str(), "wb");
      if (!f_) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
    }
    path_ = path;
  }
  ~TextSink() {
    if (f_) std::fclose(f_);
  }
  void write(const std::string& s) {
    if (gz_) {
      gz_->write(s);
    } else if (std::fwrite(s.data(), 1, s.size(), f_) != s.size()) {
      throw IoError("writing " + path_ + ": " + std::strerror(errno));
    }
  }
  void close() {
    if (gz_) {
      gz_->close();
    } else if (f_) {
      if (std::fclose(f_) != 0) {
        f_ = nullptr;
        throw IoError("closing " + path_ + ": " + std::strerror(errno));
      }
      f_ = nullptr;
    }
  }

private:
  FILE* f_ = nullptr;
  std::unique_ptr<GzWriter> gz_;
  std::string path_;
};

std::string format_dosage(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dosage_tsv(const GenotypeMatrix& geno, const std::string& path) {
  TextSink sink(path);
  std::string line = "chrom\tpos\tid";
  for (const std::string& s : geno.sample_ids) {
    line += '\t';
    line += s;
  }
  line += '\n';
  sink.write(line);
  std::vector<double> dense(geno.n_samples);
  for (int64_t j = 0; j < geno.n_variants(); ++j) {
    std::fill(dense.begin(), dense.end(), 0.0);
    const SparseCol& col = geno.cols[j];
    for (size_t k = 0; k < col.idx.size(); ++k) dense[col.idx[k]] = col.val[k];
    line = geno.chrom_names[geno.chrom_id[j]];
    line += '\t';
    line += std::to_string(geno.pos[j]);
    line += '\t';
    line += geno.variant_ids[j];
    for (int64_t i = 0; i < geno.n_samples; ++i) {
      line += '\t';
      line += format_dosage(dense[i]);
    }
    line += '\n';
    sink.write(line);
  }
  sink.close();
}

void write_vcf_subset(const GenotypeMatrix& geno, const std::string& path) {
  TextSink sink(path);
  sink.write("##fileformat=VCFv4.2\n");
  sink.write("##FORMAT=<ID=GT,Number=1,Type=String,Description=\"Genotype\">\n");
  std::string line = "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT";
  for (const std::string& s : geno.sample_ids) {
    line += '\t';
    line += s;
  }
  line += '\n';
  sink.write(line);
  static const char* kGt[3] = {"0/0", "0/1", "1/1"};
  std::vector<double> dense(geno.n_samples);
  for (int64_t j = 0; j < geno.n_variants(); ++j) {
    std::fill(dense.begin(), dense.end(), 0.0);
    const SparseCol& col = geno.cols[j];
    for (size_t k = 0; k < col.idx.size(); ++k) dense[col.idx[k]] = col.val[k];
    line = geno.chrom_names[geno.chrom_id[j]];
    line += '\t';
    line += std::to_string(geno.pos[j]);
    line += '\t';
    line += geno.variant_ids[j];
    line += "\tA\tC\t.\tPASS\t.\tGT";
    for (int64_t i = 0; i < geno.n_samples; ++i) {
      const double v = dense[i];
      const auto r = static_cast<int64_t>(std::llround(v));
      if (r < 0 || r > 2 || std::abs(v - static_cast<double>(r)) > 1e-9) {
        throw FormatError("variant " + geno.variant_ids[j] + " has dosage " +
                          format_dosage(v) + "; VCF output needs hard calls in {0,1,2}");
      }
      line += '\t';
      line += kGt[r];
    }
    line += '\n';
    sink.write(line);
  }
  sink.close();
}

PhenoCovar parse_pheno_covar(const std::string& path, const std::string& pheno_col,
                             const std::vector<std::string>& covar_cols,
                             const std::vector<std::string>& genotype_samples, Family family) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw ParseError(path, 1, "empty input");
  const std::vector<std::string> header = split_tabs(line);
  if (header.size() < 2) {
    throw ParseError(path, reader.line_number(), "expected a sample id column plus data columns");
  }

  const auto find_col = [&](const std::string& name) -> int64_t {
    for (size_t i = 1; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int64_t>(i);
    }
    std::string avail;
    for (size_t i = 1; i < header.size(); ++i) {
      if (!avail.empty()) avail += ", ";
      avail += header[i];
    }
    throw ConfigError("column '" + name + "' not found in " + path + " (available: " + avail +
                      ")");
  };
  const int64_t pheno_idx = find_col(pheno_col);
  std::vector<int64_t> covar_idx;
  for (const std::string& c : covar_cols) covar_idx.push_back(find_col(c));

  struct Row {
    double pheno;
    std::vector<double> covars;
    bool complete;
  };
  std::unordered_map<std::string, Row> rows;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != header.size()) {
      throw ParseError(path, reader.line_number(),
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    if (rows.count(fields[0])) {
      throw ParseError(path, reader.line_number(), "duplicate sample id '" + fields[0] + "'");
    }
    Row row;
    row.complete = true;
    if (fields[pheno_idx] == "NA") {
      row.complete = false;
      row.pheno = 0.0;
    } else {
      row.pheno = parse_real(fields[pheno_idx], reader, "phenotype");
    }
    for (const int64_t c : covar_idx) {
      if (fields[c] == "NA") {
        row.complete = false;
        row.covars.push_back(0.0);
      } else {
        row.covars.push_back(parse_real(fields[c], reader, "covariate"));
      }
    }
    rows.emplace(fields[0], std::move(row));
  }

  PhenoCovar out;
  int64_t incomplete = 0, unmatched_geno = 0;
  for (const std::string& s : genotype_samples) {
    const auto it = rows.find(s);
    if (it == rows.end()) {
      ++unmatched_geno;
      continue;
    }
    if (!it->second.complete) {
      ++incomplete;
      continue;
    }
    out.sample_ids.push_back(s);
  }
  if (out.sample_ids.empty()) {
    throw FormatError(path + " shares no usable samples with the genotypes");
  }
  if (unmatched_geno > 0) {
    out.warnings.push_back(std::to_string(unmatched_geno) +
                           " genotype samples have no phenotype row; dropped");
  }
  if (incomplete > 0) {
    out.warnings.push_back(std::to_string(incomplete) +
                           " samples dropped for missing phenotype or covariate values");
  }
  const int64_t extra =
      static_cast<int64_t>(rows.size()) -
      (static_cast<int64_t>(out.sample_ids.size()) + incomplete);
  if (extra > 0) {
    out.warnings.push_back(std::to_string(extra) +
                           " phenotype rows are not in the genotypes; ignored");
  }

  const auto n = static_cast<int64_t>(out.sample_ids.size());
  out.pheno.family = family;
  out.pheno.values.resize(n);
  out.covar.values.resize(n, static_cast<int64_t>(covar_cols.size()) + 1);
  out.covar.column_names = {"intercept"};
  for (const std::string& c : covar_cols) out.covar.column_names.push_back(c);
  for (int64_t i = 0; i < n; ++i) {
    const Row& row = rows.at(out.sample_ids[i]);
    out.pheno.values[i] = row.pheno;
    out.covar.values(i, 0) = 1.0;
    for (size_t c = 0; c < row.covars.size(); ++c) out.covar.values(i, c + 1) = row.covars[c];
  }
  return out;
}

DatasetBundle align_dataset(const GenotypeMatrix& geno, const PhenoCovar& pc) {
  std::unordered_map<std::string, int64_t> geno_row;
  for (int64_t i = 0; i < geno.n_samples; ++i) geno_row.emplace(geno.sample_ids[i], i);
  std::vector<int64_t> rows;
  rows.reserve(pc.sample_ids.size());
  for (const std::string& s : pc.sample_ids) {
    const auto it = geno_row.find(s);
    if (it == geno_row.end()) {
      throw DimensionError("sample '" + s + "' is not in the genotype matrix");
    }
    rows.push_back(it->second);
  }
  DatasetBundle out;
  out.geno = geno.subset_rows(rows);
  out.pheno = pc.pheno;
  out.covar = pc.covar;
  out.sample_ids = pc.sample_ids;
  out.warnings = pc.warnings;
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  LineReader reader(path);
  std::map<std::string, std::string> out;
  std::string line;
  while (reader.next(line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path, reader.line_number(), "expected key=value, got '" + body + "'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(path, reader.line_number(), "empty key");
    if (!out.emplace(key, value).second) {
      throw ParseError(path, reader.line_number(), "duplicate key '" + key + "'");
    }
  }
  return out;
}

}  // namespace qscan
