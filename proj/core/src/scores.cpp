#include "qscan/scores.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace qscan {

namespace {

// Variants whose post-projection variance falls below this fraction of the
// unprojected second moment are treated as zero-variance (monomorphic or
// collinear with the covariates).
constexpr double kVarianceRelTol = 1e-10;

void check_model_geno(const GenotypeMatrix& geno, const NullModel& model) {
  if (geno.n_samples != model.n_samples()) {
    throw DimensionError("genotypes have " + std::to_string(geno.n_samples) +
                         " samples but the null model was fit on " +
                         std::to_string(model.n_samples()));
  }
}

// Per-variant projection pieces: xlg_j = X'Lambda g_j and
// a_j = (X'Lambda X)^-1 xlg_j. The band entry is then
// (g_j'Lambda g_k - a_j . xlg_k) / (a(phi)^2 n).
struct ProjectionPieces {
  int64_t q = 0;
  std::vector<double> xlg;  // p x q row-major
  std::vector<double> a;    // p x q row-major
};

ProjectionPieces projection_pieces(const GenotypeMatrix& geno, const NullModel& model,
                                   const std::vector<int64_t>& variants) {
  const Eigen::MatrixXd& x = model.covariates;
  const int64_t q = x.cols();
  ProjectionPieces out;
  out.q = q;
  out.xlg.assign(variants.size() * q, 0.0);
  out.a.assign(variants.size() * q, 0.0);
  Eigen::VectorXd xlg(q);
  for (size_t r = 0; r < variants.size(); ++r) {
    const SparseCol& c = geno.cols[variants[r]];
    xlg.setZero();
    for (size_t k = 0; k < c.idx.size(); ++k) {
      const int64_t i = c.idx[k];
      const double wv = model.weights[i] * c.val[k];
      for (int64_t m = 0; m < q; ++m) xlg[m] += x(i, m) * wv;
    }
    Eigen::VectorXd a = model.xtwx_inv * xlg;
    for (int64_t m = 0; m < q; ++m) {
      out.xlg[r * q + m] = xlg[m];
      out.a[r * q + m] = a[m];
    }
  }
  return out;
}

double weighted_self_product(const SparseCol& c, const NullModel& model) {
  double s = 0.0;
  for (size_t k = 0; k < c.idx.size(); ++k) s += model.weights[c.idx[k]] * c.val[k] * c.val[k];
  return s;
}

// Fills the band over the given (already ordered) variant subset; adjacency
// and the bandwidth are in subset coordinates. Diagonals below the relative
// variance floor are clamped to exactly zero.
BandedMatrix band_over(const GenotypeMatrix& geno, const NullModel& model,
                       const std::vector<int64_t>& variants, int64_t bandwidth,
                       const ProjectionPieces& pp) {
  const int64_t p = static_cast<int64_t>(variants.size());
  const int64_t q = pp.q;
  const double denom = model.score_scale() * model.score_scale() * static_cast<double>(geno.n_samples);
  BandedMatrix band(p, bandwidth);

  std::vector<double> scatter(static_cast<size_t>(geno.n_samples), 0.0);
  for (int64_t rj = 0; rj < p; ++rj) {
    const int64_t j = variants[rj];
    const SparseCol& cj = geno.cols[j];
    const double* aj = pp.a.data() + rj * q;
    double* row = band.row(rj);

    const double unproj = weighted_self_product(cj, model);
    double corr = 0.0;
    for (int64_t m = 0; m < q; ++m) corr += aj[m] * pp.xlg[rj * q + m];
    double diag = (unproj - corr) / denom;
    if (!(diag > kVarianceRelTol * (unproj / denom))) diag = 0.0;
    row[0] = diag;

    // scatter Lambda-weighted dosages of j, dot against each band neighbour
    for (size_t k = 0; k < cj.idx.size(); ++k) {
      scatter[cj.idx[k]] = model.weights[cj.idx[k]] * cj.val[k];
    }
    const int64_t last = std::min(p - 1, rj + bandwidth);
    for (int64_t rk = rj + 1; rk <= last; ++rk) {
      if (geno.chrom_id[variants[rk]] != geno.chrom_id[j]) break;  // blocks are contiguous
      const SparseCol& ck = geno.cols[variants[rk]];
      double glg = 0.0;
      for (size_t t = 0; t < ck.idx.size(); ++t) glg += ck.val[t] * scatter[ck.idx[t]];
      const double* xlgk = pp.xlg.data() + rk * q;
      double c = 0.0;
      for (int64_t m = 0; m < q; ++m) c += aj[m] * xlgk[m];
      row[rk - rj] = (glg - c) / denom;
    }
    for (size_t k = 0; k < cj.idx.size(); ++k) scatter[cj.idx[k]] = 0.0;
  }
  return band;
}

}  // namespace

std::vector<double> compute_scores(const GenotypeMatrix& geno, const NullModel& model) {
  check_model_geno(geno, model);
  const int64_t p = geno.n_variants();
  const double inv = 1.0 / (model.score_scale() * std::sqrt(static_cast<double>(geno.n_samples)));
  std::vector<double> u(p, 0.0);
  for (int64_t j = 0; j < p; ++j) {
    const SparseCol& c = geno.cols[j];
    double s = 0.0;
    for (size_t k = 0; k < c.idx.size(); ++k) s += c.val[k] * model.residuals[c.idx[k]];
    u[j] = s * inv;
  }
  return u;
}

BandedMatrix compute_banded_cov(const GenotypeMatrix& geno, const NullModel& model,
                                int64_t bandwidth) {
  check_model_geno(geno, model);
  if (bandwidth < 0) throw ConfigError("bandwidth must be >= 0");
  std::vector<int64_t> all(geno.n_variants());
  for (int64_t j = 0; j < geno.n_variants(); ++j) all[j] = j;
  const ProjectionPieces pp = projection_pieces(geno, model, all);
  return band_over(geno, model, all, bandwidth, pp);
}

ScoreSet make_score_set(const GenotypeMatrix& geno, const NullModel& model, int64_t bandwidth) {
  check_model_geno(geno, model);
  if (bandwidth < 0) throw ConfigError("bandwidth must be >= 0");
  const int64_t p = geno.n_variants();
  if (p == 0) throw NoVariantsError("cannot build a score set from zero variants");

  // First pass: keep variants with genuinely positive post-projection
  // variance so band adjacency is defined on what will actually be scanned.
  std::vector<int64_t> all(p);
  for (int64_t j = 0; j < p; ++j) all[j] = j;
  const ProjectionPieces pp_all = projection_pieces(geno, model, all);
  const double denom = model.score_scale() * model.score_scale() * static_cast<double>(geno.n_samples);

  std::vector<int64_t> kept;
  kept.reserve(p);
  for (int64_t j = 0; j < p; ++j) {
    const double unproj = weighted_self_product(geno.cols[j], model);
    double corr = 0.0;
    for (int64_t m = 0; m < pp_all.q; ++m) corr += pp_all.a[j * pp_all.q + m] * pp_all.xlg[j * pp_all.q + m];
    const double diag = (unproj - corr) / denom;
    if (diag > kVarianceRelTol * (unproj / denom) && diag > 0.0) kept.push_back(j);
  }
  if (kept.empty()) {
    throw NoVariantsError("every variant has zero post-projection variance");
  }

  ScoreSet s;
  s.variant_index = kept;
  s.n_samples = geno.n_samples;
  s.dropped_zero_variance = p - static_cast<int64_t>(kept.size());
  s.chrom_names = geno.chrom_names;
  s.chrom_id.reserve(kept.size());
  s.pos.reserve(kept.size());
  for (int64_t j : kept) {
    s.chrom_id.push_back(geno.chrom_id[j]);
    s.pos.push_back(geno.pos[j]);
  }

  const std::vector<double> u_all = compute_scores(geno, model);
  s.u.reserve(kept.size());
  for (int64_t j : kept) s.u.push_back(u_all[j]);

  // Reuse the all-variant projection pieces; rows for kept variants only.
  ProjectionPieces pp;
  pp.q = pp_all.q;
  pp.xlg.resize(kept.size() * pp.q);
  pp.a.resize(kept.size() * pp.q);
  for (size_t r = 0; r < kept.size(); ++r) {
    for (int64_t m = 0; m < pp.q; ++m) {
      pp.xlg[r * pp.q + m] = pp_all.xlg[kept[r] * pp.q + m];
      pp.a[r * pp.q + m] = pp_all.a[kept[r] * pp.q + m];
    }
  }
  s.cov = band_over(geno, model, kept, bandwidth, pp);
  return s;
}

std::vector<std::pair<int64_t, int64_t>> ScoreSet::chrom_blocks() const {
  std::vector<std::pair<int64_t, int64_t>> blocks;
  const int64_t p = size();
  int64_t start = 0;
  for (int64_t j = 1; j <= p; ++j) {
    if (j == p || chrom_id[j] != chrom_id[start]) {
      blocks.emplace_back(start, j);
      start = j;
    }
  }
  return blocks;
}

// ---------- binary cache ----------
// Little-endian layout (see README): magic "QSCS", u32 version, u64 p,
// u64 bandwidth, u64 n_samples, u64 dropped, u64 n_chrom names
// (u64 length + bytes each), then p x {i32 chrom_id}, p x {i64 pos},
// p x {i64 variant_index}, p x {f64 u}, p*(bandwidth+1) x {f64 band row}.

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& buf, double d) { put_u64(buf, std::bit_cast<uint64_t>(d)); }

struct CacheReader {
  explicit CacheReader(const std::string& path) : path_(path), f_(std::fopen(path.c_str(), "rb")) {
    if (!f_) throw IoError("cannot open score cache " + path);
  }
  ~CacheReader() {
    if (f_) std::fclose(f_);
  }
  void read(void* dst, size_t len) {
    if (std::fread(dst, 1, len, f_) != len) {
      throw FormatError("score cache " + path_ + " is truncated");
    }
  }
  uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(size_t len) {
    std::string s(len, '\0');
    if (len) read(s.data(), len);
    return s;
  }
  std::string path_;
  std::FILE* f_;
};

constexpr uint32_t kCacheMagic = 0x53435351u;  // "QSCS" little-endian
constexpr uint32_t kCacheVersion = 1;

}  // namespace

void save_score_set(const ScoreSet& s, const std::string& path) {
  std::string buf;
  const uint64_t p = static_cast<uint64_t>(s.size());
  const uint64_t bw = static_cast<uint64_t>(s.cov.bandwidth());
  buf.reserve(64 + p * (28 + 8 * (bw + 1)));
  put_u32(buf, kCacheMagic);
  put_u32(buf, kCacheVersion);
  put_u64(buf, p);
  put_u64(buf, bw);
  put_u64(buf, static_cast<uint64_t>(s.n_samples));
  put_u64(buf, static_cast<uint64_t>(s.dropped_zero_variance));
  put_u64(buf, static_cast<uint64_t>(s.chrom_names.size()));
  for (const std::string& name : s.chrom_names) {
    put_u64(buf, name.size());
    buf.append(name);
  }
  for (int64_t j = 0; j < s.size(); ++j) put_u32(buf, static_cast<uint32_t>(s.chrom_id[j]));
  for (int64_t j = 0; j < s.size(); ++j) put_u64(buf, static_cast<uint64_t>(s.pos[j]));
  for (int64_t j = 0; j < s.size(); ++j) put_u64(buf, static_cast<uint64_t>(s.variant_index[j]));
  for (int64_t j = 0; j < s.size(); ++j) put_f64(buf, s.u[j]);
  for (double v : s.cov.storage()) put_f64(buf, v);

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write score cache " + path);
  const size_t wrote = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (wrote != buf.size()) throw IoError("short write to score cache " + path);
}

ScoreSet load_score_set(const std::string& path) {
  CacheReader r(path);
  if (r.u32() != kCacheMagic) throw FormatError(path + " is not a score cache (bad magic)");
  const uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw FormatError(path + ": unsupported score cache version " + std::to_string(version));
  }
  const uint64_t p = r.u64();
  const uint64_t bw = r.u64();
  ScoreSet s;
  s.n_samples = static_cast<int64_t>(r.u64());
  s.dropped_zero_variance = static_cast<int64_t>(r.u64());
  const uint64_t n_chrom = r.u64();
  s.chrom_names.reserve(n_chrom);
  for (uint64_t i = 0; i < n_chrom; ++i) {
    const uint64_t len = r.u64();
    if (len > (1u << 20)) throw FormatError(path + ": implausible chromosome name length");
    s.chrom_names.push_back(r.str(len));
  }
  s.chrom_id.resize(p);
  for (uint64_t j = 0; j < p; ++j) s.chrom_id[j] = static_cast<int32_t>(r.u32());
  s.pos.resize(p);
  for (uint64_t j = 0; j < p; ++j) s.pos[j] = static_cast<int64_t>(r.u64());
  s.variant_index.resize(p);
  for (uint64_t j = 0; j < p; ++j) s.variant_index[j] = static_cast<int64_t>(r.u64());
  s.u.resize(p);
  for (uint64_t j = 0; j < p; ++j) s.u[j] = r.f64();
  s.cov = BandedMatrix(static_cast<int64_t>(p), static_cast<int64_t>(bw));
  for (double& v : s.cov.storage()) v = r.f64();
  return s;
}

}  // namespace qscan
