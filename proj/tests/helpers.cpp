#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qscan/rng.hpp"

namespace testutil {

using namespace qscan;

Eigen::MatrixXd dense_covariance(const GenotypeMatrix& geno, const NullModel& model) {
  const int64_t n = geno.n_samples;
  const int64_t p = geno.n_variants();
  Eigen::MatrixXd g(n, p);
  for (int64_t j = 0; j < p; ++j) g.col(j) = geno.dense_col(j);
  const Eigen::VectorXd& w = model.weights;
  Eigen::MatrixXd xtw = model.covariates.transpose() * w.asDiagonal();  // q x n
  Eigen::MatrixXd xtwx = xtw * model.covariates;
  Eigen::MatrixXd a = xtwx.ldlt().solve(xtw * g);            // q x p
  Eigen::MatrixXd gt = g - model.covariates * a;             // residualized columns
  const double s = model.score_scale();
  return (gt.transpose() * w.asDiagonal() * gt) / (s * s * static_cast<double>(n));
}

Eigen::VectorXd dense_scores(const GenotypeMatrix& geno, const NullModel& model) {
  const int64_t n = geno.n_samples;
  const int64_t p = geno.n_variants();
  Eigen::VectorXd u(p);
  for (int64_t j = 0; j < p; ++j) u[j] = geno.dense_col(j).dot(model.residuals);
  return u / (model.score_scale() * std::sqrt(static_cast<double>(n)));
}

double eigen_q_stat(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& u) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues();
  return (u.squaredNorm() - lam.sum()) / std::sqrt(2.0 * lam.squaredNorm());
}

double dense_m_stat(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& u) {
  const double su = u.sum();
  return su * su / sigma.sum();
}

Eigen::MatrixXd window_block(const BandedMatrix& cov, int64_t s, int64_t e) {
  const int64_t m = e - s + 1;
  Eigen::MatrixXd block(m, m);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < m; ++j) block(i, j) = cov.at(s + i, s + j);
  }
  return block;
}

BandedMatrix random_psd_band(int64_t p, int64_t bw, uint64_t seed,
                             const std::vector<std::pair<int64_t, int64_t>>& blocks) {
  Rng rng(seed, 0);
  std::vector<int64_t> block_of(p, 0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (int64_t j = blocks[b].first; j < blocks[b].second; ++j) block_of[j] = b;
  }
  // lower factor in the banded_cholesky layout: l.row(m)[d] = L(m+d, m)
  BandedMatrix l(p, bw);
  const double off_scale = 0.5 / std::sqrt(static_cast<double>(bw) + 1.0);
  for (int64_t m = 0; m < p; ++m) {
    l.row(m)[0] = 0.6 + rng.uniform();
    for (int64_t d = 1; d <= bw && m + d < p; ++d) {
      l.row(m)[d] = block_of[m + d] == block_of[m] ? off_scale * rng.normal() : 0.0;
    }
  }
  BandedMatrix a(p, bw);
  for (int64_t j = 0; j < p; ++j) {
    for (int64_t k = j; k <= std::min(p - 1, j + bw); ++k) {
      double v = 0.0;
      for (int64_t m = std::max<int64_t>(0, k - bw); m <= j; ++m) {
        v += l.row(m)[j - m] * l.row(m)[k - m];
      }
      a.set(j, k, v);
    }
  }
  return a;
}

ScoreSet synthetic_score_set(int64_t p, int64_t bw, uint64_t seed, int n_chrom) {
  std::vector<std::pair<int64_t, int64_t>> blocks;
  const int64_t step = (p + n_chrom - 1) / n_chrom;
  for (int64_t b = 0; b * step < p; ++b) {
    blocks.emplace_back(b * step, std::min(p, (b + 1) * step));
  }
  ScoreSet s;
  s.cov = random_psd_band(p, bw, seed, blocks);
  Rng rng(seed, 1);
  s.u.resize(p);
  for (double& v : s.u) v = rng.normal();
  s.variant_index.resize(p);
  s.chrom_id.resize(p);
  s.pos.resize(p);
  for (int64_t j = 0; j < p; ++j) {
    s.variant_index[j] = j;
    s.chrom_id[j] = 0;
    for (size_t b = 0; b < blocks.size(); ++b) {
      if (j >= blocks[b].first && j < blocks[b].second) s.chrom_id[j] = static_cast<int32_t>(b);
    }
    s.pos[j] = 100 * (j + 1);
  }
  for (size_t b = 0; b < blocks.size(); ++b) s.chrom_names.push_back(std::to_string(b + 1));
  s.n_samples = 1000;
  return s;
}

std::vector<WindowStat> brute_force_scan(const ScoreSet& scores, const ScanConfig& cfg,
                                         int64_t* skipped) {
  std::vector<WindowStat> out;
  int64_t skip = 0;
  for (const auto& [b0, b1] : scores.chrom_blocks()) {
    for (int64_t s = b0; s + cfg.l_min <= b1; ++s) {
      for (int64_t m = cfg.l_min; m <= cfg.l_max && s + m <= b1; ++m) {
        const int64_t e = s + m - 1;
        double sum_u = 0.0, sum_u2 = 0.0, trace = 0.0, frob2 = 0.0, rowvar = 0.0;
        for (int64_t i = s; i <= e; ++i) {
          sum_u += scores.u[i];
          sum_u2 += scores.u[i] * scores.u[i];
          trace += scores.cov.at(i, i);
          for (int64_t j = s; j <= e; ++j) {
            frob2 += scores.cov.at(i, j) * scores.cov.at(i, j);
            rowvar += scores.cov.at(i, j);
          }
        }
        WindowStat w;
        w.start = s;
        w.end = e;
        w.trace = trace;
        w.frob2 = frob2;
        if (cfg.method == Method::qscan) {
          if (!(frob2 > 0.0)) {
            ++skip;
            continue;
          }
          w.stat = (sum_u2 - trace) / std::sqrt(2.0 * frob2);
        } else {
          if (!(rowvar > 0.0)) {
            ++skip;
            continue;
          }
          w.stat = sum_u * sum_u / rowvar;
        }
        out.push_back(w);
      }
    }
  }
  if (skipped) *skipped = skip;
  return out;
}

std::vector<DetectedRegion> naive_detect(std::vector<WindowStat> cands) {
  std::vector<DetectedRegion> out;
  while (!cands.empty()) {
    size_t best = 0;
    for (size_t i = 1; i < cands.size(); ++i) {
      const WindowStat& a = cands[i];
      const WindowStat& b = cands[best];
      const bool better = a.stat > b.stat ||
                          (a.stat == b.stat &&
                           (a.start < b.start || (a.start == b.start && a.end < b.end)));
      if (better) best = i;
    }
    DetectedRegion r;
    r.start = cands[best].start;
    r.end = cands[best].end;
    r.stat = cands[best].stat;
    r.rank = static_cast<int>(out.size()) + 1;
    out.push_back(r);
    std::vector<WindowStat> keep;
    for (const WindowStat& w : cands) {
      if (w.end < r.start || w.start > r.end) keep.push_back(w);
    }
    cands = std::move(keep);
  }
  return out;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Fixture make_fixture(int64_t n, int64_t p, int64_t bandwidth, uint64_t seed, double ld_rho,
                     double maf_min) {
  LdGenotypeModel ld;
  ld.ld_rho = ld_rho;
  ld.maf_min = maf_min;
  GenotypeMatrix raw = generate_genotypes(ld, n, p, seed);
  ContinuousSample cs = simulate_continuous(raw, {}, {}, seed + 1000003);
  Fixture f;
  f.model = fit_null_model(cs.pheno, cs.covar);
  FilterResult fr = filter_variants(raw, 0.05, 1.0);
  f.geno = std::move(fr.geno);
  f.kept = std::move(fr.kept);
  f.scores = make_score_set(f.geno, f.model, bandwidth);
  return f;
}

GenotypeMatrix geno_from_dense(const std::vector<std::vector<double>>& cols) {
  GenotypeMatrix g;
  g.n_samples = cols.empty() ? 0 : static_cast<int64_t>(cols[0].size());
  for (int64_t i = 0; i < g.n_samples; ++i) g.sample_ids.push_back("s" + std::to_string(i + 1));
  g.chrom_names = {"1"};
  g.cols.resize(cols.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    g.chrom_id.push_back(0);
    g.pos.push_back(100 * (static_cast<int64_t>(j) + 1));
    g.variant_ids.push_back("v" + std::to_string(j + 1));
    g.set_col_from_dense(static_cast<int64_t>(j), cols[j]);
  }
  g.recompute_maf();
  return g;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testutil
