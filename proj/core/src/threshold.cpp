#include "qscan/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qscan/banded.hpp"
#include "qscan/null_model.hpp"
#include "qscan/parallel.hpp"
#include "qscan/rng.hpp"

namespace qscan {

void ThresholdConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0, 1)");
  const auto needed = static_cast<int64_t>(std::ceil(1.0 / alpha));
  if (n_reps < needed) {
    throw ConfigError("n_reps = " + std::to_string(n_reps) + " cannot resolve alpha = " +
                      std::to_string(alpha) + "; need at least " + std::to_string(needed));
  }
}

PseudoScoreSampler::PseudoScoreSampler(const GenotypeMatrix& geno, const NullModel& model,
                                       const ScoreSet& scores)
    : mode_(McMode::genotype_projection), p_(scores.size()) {
  if (geno.n_samples != model.n_samples() || geno.n_samples != scores.n_samples) {
    throw DimensionError("genotypes, null model and scores disagree on the sample count");
  }
  cols_.resize(p_);
  for (int64_t j = 0; j < p_; ++j) cols_[j] = &geno.cols[scores.variant_index[j]];
  build_projection(geno, model);
}

PseudoScoreSampler::PseudoScoreSampler(const ScoreSet& scores, const GenotypeMatrix* fallback_geno,
                                       const NullModel* fallback_model)
    : mode_(McMode::banded_cholesky), p_(scores.size()) {
  try {
    factor_ = banded_cholesky(scores.cov);
    return;
  } catch (const NotPositiveDefiniteError&) {
    // fall through to the jittered attempt
  }
  BandedMatrix jittered = scores.cov;
  double max_diag = 0.0;
  for (int64_t j = 0; j < p_; ++j) max_diag = std::max(max_diag, jittered.diag(j));
  for (int64_t j = 0; j < p_; ++j) jittered.set(j, j, jittered.diag(j) + 1e-8 * max_diag);
  try {
    factor_ = banded_cholesky(jittered);
    notes_.push_back("banded covariance needed a 1e-8 diagonal jitter to factor");
    return;
  } catch (const NotPositiveDefiniteError&) {
    if (!fallback_geno || !fallback_model) throw;
  }
  notes_.push_back("banded covariance is not positive definite; fell back to genotype projection");
  mode_ = McMode::genotype_projection;
  cols_.resize(p_);
  for (int64_t j = 0; j < p_; ++j) cols_[j] = &fallback_geno->cols[scores.variant_index[j]];
  if (fallback_geno->n_samples != fallback_model->n_samples() ||
      fallback_geno->n_samples != scores.n_samples) {
    throw DimensionError("genotypes, null model and scores disagree on the sample count");
  }
  build_projection(*fallback_geno, *fallback_model);
}

void PseudoScoreSampler::build_projection(const GenotypeMatrix& geno, const NullModel& model) {
  n_ = geno.n_samples;
  x_ = model.covariates;
  const int64_t q = x_.cols();
  sqrt_weights_.resize(n_);
  for (int64_t i = 0; i < n_; ++i) sqrt_weights_[i] = std::sqrt(model.weights[i]);

  proj_coef_.assign(static_cast<size_t>(p_) * q, 0.0);
  Eigen::VectorXd xlg(q);
  for (int64_t j = 0; j < p_; ++j) {
    xlg.setZero();
    const SparseCol& col = *cols_[j];
    for (size_t t = 0; t < col.idx.size(); ++t) {
      xlg += (col.val[t] * model.weights[col.idx[t]]) * x_.row(col.idx[t]).transpose();
    }
    Eigen::Map<Eigen::VectorXd>(proj_coef_.data() + j * q, q) = model.xtwx_inv * xlg;
  }
  inv_scale_sqrt_n_ = 1.0 / (model.score_scale() * std::sqrt(static_cast<double>(n_)));
}

void PseudoScoreSampler::draw(uint64_t seed, uint64_t replicate, std::vector<double>& u_out) const {
  u_out.resize(p_);
  Rng rng(seed, replicate);

  if (mode_ == McMode::banded_cholesky) {
    static thread_local std::vector<double> z;
    z.resize(p_);
    for (int64_t j = 0; j < p_; ++j) z[j] = rng.normal();
    banded_lower_multiply(factor_, z.data(), u_out.data());
    return;
  }

  static thread_local std::vector<double> w;
  w.resize(n_);
  for (int64_t i = 0; i < n_; ++i) w[i] = sqrt_weights_[i] * rng.normal();
  const Eigen::VectorXd t =
      x_.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), n_);
  const int64_t q = x_.cols();
  for (int64_t j = 0; j < p_; ++j) {
    const SparseCol& col = *cols_[j];
    double gw = 0.0;
    for (size_t k = 0; k < col.idx.size(); ++k) gw += col.val[k] * w[col.idx[k]];
    const double corr =
        Eigen::Map<const Eigen::VectorXd>(proj_coef_.data() + j * q, q).dot(t);
    u_out[j] = (gw - corr) * inv_scale_sqrt_n_;
  }
}

void mc_max_samples(const PseudoScoreSampler& sampler, const detail::WindowTables& tables,
                    int64_t n_reps, uint64_t seed, int threads, std::vector<double>* qmax,
                    std::vector<double>* mmax) {
  if (mmax && !tables.with_mscan) {
    throw ConfigError("window tables were built without mscan support");
  }
  threads = resolve_threads(threads);
  if (qmax) qmax->resize(n_reps);
  if (mmax) mmax->resize(n_reps);
  parallel_for(n_reps, threads, [&](int64_t r) {
    static thread_local std::vector<double> u;
    sampler.draw(seed, static_cast<uint64_t>(r), u);
    double qm = 0.0, mm = 0.0;
    detail::table_scan_max(tables, u.data(), qmax ? &qm : nullptr, mmax ? &mm : nullptr);
    if (qmax) (*qmax)[r] = qm;
    if (mmax) (*mmax)[r] = mm;
  });
}

double mc_quantile(std::vector<double> samples, double alpha) {
  if (samples.empty()) throw ConfigError("cannot take a quantile of zero samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0, 1)");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<int64_t>(samples.size());
  const auto k = static_cast<int64_t>(std::ceil(static_cast<double>(n) * (1.0 - alpha)));
  return samples[std::min(n, std::max<int64_t>(1, k)) - 1];
}

ThresholdResult mc_threshold(const ScoreSet& scores, const GenotypeMatrix* geno,
                             const NullModel* model, const ScanConfig& scan_cfg,
                             const ThresholdConfig& cfg) {
  cfg.validate();
  scan_cfg.validate(scores.size());

  std::optional<PseudoScoreSampler> sampler;
  if (cfg.mode == McMode::genotype_projection) {
    if (!geno || !model) {
      throw ConfigError("genotype_projection needs the genotypes and the fitted null model");
    }
    sampler.emplace(*geno, *model, scores);
  } else {
    sampler.emplace(scores, geno, model);
  }

  const bool want_m = scan_cfg.method == Method::mscan;
  const auto tables = detail::build_window_tables(scores, scan_cfg.l_min, scan_cfg.l_max, want_m);

  std::vector<double> qmax, mmax;
  mc_max_samples(*sampler, tables, cfg.n_reps, cfg.seed, cfg.threads, &qmax,
                 want_m ? &mmax : nullptr);

  ThresholdResult out;
  out.max_samples = want_m ? std::move(mmax) : std::move(qmax);
  std::sort(out.max_samples.begin(), out.max_samples.end());
  out.h = mc_quantile(out.max_samples, cfg.alpha);
  out.alpha = cfg.alpha;
  out.n_reps = cfg.n_reps;
  out.mode = sampler->effective_mode();
  out.bound_upper = theoretical_bound(static_cast<double>(scores.size()), scan_cfg.l_min,
                                      scan_cfg.l_max, cfg.alpha);
  out.rate = asymptotic_rate(static_cast<double>(scores.size()));
  out.notes = sampler->notes();
  return out;
}

double theoretical_bound(double p, int64_t l_min, int64_t l_max, double alpha) {
  if (!(p > 1.0)) throw ConfigError("the bound needs p > 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0, 1)");
  if (l_min < 2 || l_max < l_min) throw ConfigError("need 2 <= l_min <= l_max");
  // a single-length scan still counts one window family per start
  const double n_lengths = std::max<double>(1.0, static_cast<double>(l_max - l_min));
  const double gamma = std::log(p * n_lengths) - std::log(alpha);
  return std::sqrt(2.0 * gamma) +
         std::sqrt(2.0) * gamma / std::pow(static_cast<double>(l_min) * std::log(p), 0.25);
}

double asymptotic_rate(double p) {
  if (!(p > 1.0)) throw ConfigError("the rate needs p > 1");
  return std::sqrt(2.0 * std::log(p));
}

}  // namespace qscan
