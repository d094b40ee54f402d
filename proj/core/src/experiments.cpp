#include "qscan/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "qscan/detect.hpp"
#include "qscan/evaluate.hpp"
#include "qscan/null_model.hpp"
#include "qscan/rng.hpp"

namespace qscan {

namespace {

uint64_t sub_seed(uint64_t seed, uint64_t rep, uint64_t tag) {
  return mix64(seed + mix64(rep * 0x9E3779B97F4A7C15ULL + tag));
}

void check_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("need at least one experiment replicate");
  if (cfg.alphas.empty()) throw ConfigError("need at least one alpha level");
  for (const double a : cfg.alphas) {
    ThresholdConfig tc;
    tc.alpha = a;
    tc.n_reps = cfg.mc_reps;
    tc.validate();
  }
  if (cfg.n < 4) throw ConfigError("need at least four samples");
  if (cfg.family == Family::binomial && cfg.n % 2 != 0) {
    throw ConfigError("binomial experiments split n into equal cases and controls; n must be even");
  }
  ScanConfig sc{cfg.l_min, cfg.l_max, Method::qscan};
  sc.validate(cfg.p);
}

// One replicate's dataset, null fit, scores, and window tables.
struct ReplicateData {
  FilterResult filt;
  NullModel model;
  ScoreSet scores;
  detail::WindowTables tables;
  std::optional<PseudoScoreSampler> sampler;
  uint64_t mc_seed = 0;
};

ReplicateData build_replicate(const ExperimentConfig& cfg, uint64_t rep,
                              const std::vector<int64_t>& causal, const std::vector<double>& beta,
                              bool with_mscan) {
  ReplicateData d;
  d.mc_seed = sub_seed(cfg.seed, rep, 3);
  const uint64_t s_geno = sub_seed(cfg.seed, rep, 1);
  const uint64_t s_pheno = sub_seed(cfg.seed, rep, 2);

  PhenotypeVector pheno;
  CovariateMatrix covar;
  GenotypeMatrix geno;
  if (cfg.family == Family::gaussian) {
    geno = generate_genotypes(cfg.ld, cfg.n, cfg.p, s_geno);
    ContinuousSample s = simulate_continuous(geno, causal, beta, s_pheno);
    pheno = std::move(s.pheno);
    covar = std::move(s.covar);
  } else {
    const int64_t n_cases = cfg.n / 2;
    const int64_t pop = cfg.population_multiplier * n_cases;
    const GenotypeMatrix popgeno = generate_genotypes(cfg.ld, pop, cfg.p, s_geno);
    BinarySample s =
        simulate_binary(popgeno, causal, beta, n_cases, cfg.n - n_cases, s_pheno,
                        cfg.logit_intercept);
    geno = popgeno.subset_rows(s.rows);
    pheno = std::move(s.pheno);
    covar = std::move(s.covar);
  }

  d.model = fit_null_model(pheno, covar);
  d.filt = filter_variants(geno, cfg.maf_max, cfg.mac_min);
  d.scores = make_score_set(d.filt.geno, d.model, cfg.l_max - 1);
  d.tables = detail::build_window_tables(d.scores, cfg.l_min, cfg.l_max, with_mscan);
  if (cfg.mode == McMode::genotype_projection) {
    d.sampler.emplace(d.filt.geno, d.model, d.scores);
  } else {
    d.sampler.emplace(d.scores, &d.filt.geno, &d.model);
  }
  return d;
}

// Truth region in retained-variant index space; empty when every variant of
// the region was filtered out.
std::optional<Interval> to_retained(const Interval& region, const std::vector<int64_t>& original) {
  const auto lo = std::lower_bound(original.begin(), original.end(), region.start);
  const auto hi = std::upper_bound(original.begin(), original.end(), region.end);
  if (lo == hi) return std::nullopt;
  return Interval{lo - original.begin(), hi - original.begin() - 1};
}

// Original column index of each retained variant.
std::vector<int64_t> retained_to_original(const FilterResult& filt, const ScoreSet& scores) {
  std::vector<int64_t> out(scores.size());
  for (int64_t j = 0; j < scores.size(); ++j) out[j] = filt.kept[scores.variant_index[j]];
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

FwerResult fwer_experiment(const ExperimentConfig& cfg) {
  check_experiment(cfg);
  std::vector<Method> methods = cfg.methods;
  if (methods.empty()) throw ConfigError("need at least one method");
  const bool want_m =
      std::find(methods.begin(), methods.end(), Method::mscan) != methods.end();
  const bool want_q =
      std::find(methods.begin(), methods.end(), Method::qscan) != methods.end();

  // rejections[method][alpha]
  std::vector<std::vector<int64_t>> rej_q(cfg.alphas.size()), rej_m(cfg.alphas.size());
  std::vector<int64_t> count_q(cfg.alphas.size(), 0), count_m(cfg.alphas.size(), 0);

  for (int64_t rep = 0; rep < cfg.replicates; ++rep) {
    ReplicateData d = build_replicate(cfg, static_cast<uint64_t>(rep), {}, {}, want_m);

    std::vector<double> qmax, mmax;
    mc_max_samples(*d.sampler, d.tables, cfg.mc_reps, d.mc_seed, cfg.threads,
                   want_q ? &qmax : nullptr, want_m ? &mmax : nullptr);
    double q_data = 0.0, m_data = 0.0;
    detail::table_scan_max(d.tables, d.scores.u.data(), want_q ? &q_data : nullptr,
                           want_m ? &m_data : nullptr);

    for (size_t a = 0; a < cfg.alphas.size(); ++a) {
      if (want_q && q_data > mc_quantile(qmax, cfg.alphas[a])) ++count_q[a];
      if (want_m && m_data > mc_quantile(mmax, cfg.alphas[a])) ++count_m[a];
    }
    if (cfg.progress) cfg.progress(rep + 1, cfg.replicates);
  }

  FwerResult out;
  const auto push_cells = [&](Method method, const std::vector<int64_t>& counts) {
    for (size_t a = 0; a < cfg.alphas.size(); ++a) {
      FwerCell cell;
      cell.method = method;
      cell.alpha = cfg.alphas[a];
      cell.replicates = cfg.replicates;
      cell.rejections = counts[a];
      cell.fwer = static_cast<double>(counts[a]) / static_cast<double>(cfg.replicates);
      const double se =
          std::sqrt(cell.alpha * (1.0 - cell.alpha) / static_cast<double>(cfg.replicates));
      cell.target_lo = cell.alpha - 1.96 * se;
      cell.target_hi = cell.alpha + 1.96 * se;
      out.cells.push_back(cell);
    }
  };
  if (want_q) push_cells(Method::qscan, count_q);
  if (want_m) push_cells(Method::mscan, count_m);
  return out;
}

namespace {

// ||mu_I||^2 / ||lambda_I||_2 for the retained slice of one region, with
// mu = sqrt(n) (Sigma beta)_I from the banded covariance actually used by the
// scan and beta living on the retained causal variants.
double realized_condition_ratio(const ScoreSet& scores, const Interval& region_retained,
                                const std::vector<double>& beta_retained) {
  const int64_t r0 = region_retained.start, r1 = region_retained.end;
  const int64_t len = r1 - r0 + 1;
  const double n = static_cast<double>(scores.n_samples);
  double mu2 = 0.0;
  for (int64_t j = r0; j <= r1; ++j) {
    double acc = 0.0;
    for (int64_t k = r0; k <= r1; ++k) acc += scores.cov.at(j, k) * beta_retained[k - r0];
    mu2 += n * acc * acc;
  }
  double frob2 = 0.0;
  for (int64_t j = 0; j < len; ++j) {
    for (int64_t k = 0; k < len; ++k) {
      const double v = scores.cov.at(r0 + j, r0 + k);
      frob2 += v * v;
    }
  }
  return frob2 > 0.0 ? mu2 / std::sqrt(frob2) : 0.0;
}

// Rescales beta so the first region's ratio against a dense centered
// genotype covariance (dispersion 1) hits target; the realized ratio is
// re-measured against the fitted covariance afterwards.
void rescale_to_condition(const GenotypeMatrix& geno, const PlantedSignal& sig, double target,
                          std::vector<double>& beta) {
  const Interval r = sig.regions.front();
  std::vector<int64_t> in_region;
  std::vector<double> b;
  for (size_t k = 0; k < sig.causal.size(); ++k) {
    if (sig.causal[k] >= r.start && sig.causal[k] <= r.end) {
      in_region.push_back(sig.causal[k]);
      b.push_back(beta[k]);
    }
  }
  const auto m = static_cast<int64_t>(in_region.size());
  if (m == 0) throw PlacementError("first region has no causal variants to scale");
  const double n = static_cast<double>(geno.n_samples);
  Eigen::MatrixXd cov(m, m);
  for (int64_t a = 0; a < m; ++a) {
    const SparseCol& ca = geno.cols[in_region[a]];
    const double mean_a = ca.sum() / n;
    for (int64_t c = a; c < m; ++c) {
      const SparseCol& cc = geno.cols[in_region[c]];
      double dot = 0.0;
      size_t i = 0, j = 0;
      while (i < ca.idx.size() && j < cc.idx.size()) {
        if (ca.idx[i] < cc.idx[j]) {
          ++i;
        } else if (ca.idx[i] > cc.idx[j]) {
          ++j;
        } else {
          dot += ca.val[i] * cc.val[j];
          ++i;
          ++j;
        }
      }
      const double mean_c = cc.sum() / n;
      cov(a, c) = cov(c, a) = dot / n - mean_a * mean_c;
    }
  }
  const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  const Eigen::VectorXd mu = std::sqrt(n) * (cov * bv);
  const double ratio0 = mu.squaredNorm() / cov.norm();
  if (!(ratio0 > 0.0)) throw PlacementError("first region carries no effect to scale");
  const double factor = std::sqrt(target / ratio0);
  for (double& v : beta) v *= factor;
}

}  // namespace

PowerResult power_experiment(const PowerConfig& pcfg) {
  if (!(pcfg.alpha > 0.0 && pcfg.alpha < 1.0)) {
    throw ConfigError("alpha must lie strictly inside (0, 1)");
  }
  // power studies reject at the single pcfg.alpha; the base alpha list is
  // irrelevant here, so validation runs against what will actually be used
  ExperimentConfig cfg = pcfg.base;
  cfg.alphas = {pcfg.alpha};
  check_experiment(cfg);

  PowerResult out;
  const ScanConfig scan_q{cfg.l_min, cfg.l_max, Method::qscan};
  const ScanConfig scan_m{cfg.l_min, cfg.l_max, Method::mscan};

  for (int64_t rep = 0; rep < cfg.replicates; ++rep) {
    const uint64_t s_signal = sub_seed(cfg.seed, rep, 4);

    // plant against a preview of the genotype panel (same seed, so identical)
    const uint64_t s_geno = sub_seed(cfg.seed, rep, 1);
    GenotypeMatrix geno = generate_genotypes(
        cfg.ld, cfg.family == Family::gaussian ? cfg.n : cfg.population_multiplier * (cfg.n / 2),
        cfg.p, s_geno);
    PlantedSignal sig = plant_signals(geno, pcfg.signal, s_signal);
    if (pcfg.condition_target > 0.0) {
      const double target =
          pcfg.condition_target * std::sqrt(std::log(static_cast<double>(cfg.p)));
      rescale_to_condition(geno, sig, target, sig.beta);
    }

    ReplicateData d;
    {
      PhenotypeVector pheno;
      CovariateMatrix covar;
      const uint64_t s_pheno = sub_seed(cfg.seed, rep, 2);
      if (cfg.family == Family::gaussian) {
        ContinuousSample s = simulate_continuous(geno, sig.causal, sig.beta, s_pheno);
        pheno = std::move(s.pheno);
        covar = std::move(s.covar);
      } else {
        const int64_t n_cases = cfg.n / 2;
        BinarySample s = simulate_binary(geno, sig.causal, sig.beta, n_cases, cfg.n - n_cases,
                                         s_pheno, cfg.logit_intercept);
        geno = geno.subset_rows(s.rows);
        pheno = std::move(s.pheno);
        covar = std::move(s.covar);
      }
      d.mc_seed = sub_seed(cfg.seed, rep, 3);
      d.model = fit_null_model(pheno, covar);
      d.filt = filter_variants(geno, cfg.maf_max, cfg.mac_min);
      d.scores = make_score_set(d.filt.geno, d.model, cfg.l_max - 1);
      d.tables = detail::build_window_tables(d.scores, cfg.l_min, cfg.l_max, true);
      if (cfg.mode == McMode::genotype_projection) {
        d.sampler.emplace(d.filt.geno, d.model, d.scores);
      } else {
        d.sampler.emplace(d.scores, &d.filt.geno, &d.model);
      }
    }

    std::vector<double> qmax, mmax;
    mc_max_samples(*d.sampler, d.tables, cfg.mc_reps, d.mc_seed, cfg.threads, &qmax, &mmax);
    const double h_q = mc_quantile(qmax, pcfg.alpha);
    const double h_m = mc_quantile(mmax, pcfg.alpha);

    const std::vector<int64_t> original = retained_to_original(d.filt, d.scores);
    std::vector<Interval> truth;
    for (const Interval& r : sig.regions) {
      if (auto mapped = to_retained(r, original)) truth.push_back(*mapped);
    }

    const auto evaluate = [&](const ScanConfig& sc, double h, std::vector<double>& det,
                              std::vector<double>& jac) {
      const ScanReport report = scan_and_detect(d.scores, sc, h, cfg.threads);
      std::vector<Interval> found;
      found.reserve(report.regions.size());
      for (const DetectedRegion& r : report.regions) found.push_back(Interval{r.start, r.end});
      det.push_back(detection_rate(truth, found));
      jac.push_back(jaccard_score(truth, found));
    };
    evaluate(scan_q, h_q, out.detection_q, out.jaccard_q);
    evaluate(scan_m, h_m, out.detection_m, out.jaccard_m);

    // realized condition ratio of the first region, on the retained slice
    if (!truth.empty()) {
      const Interval& r0 = truth.front();
      std::vector<double> beta_r(r0.size(), 0.0);
      for (size_t k = 0; k < sig.causal.size(); ++k) {
        const auto it =
            std::lower_bound(original.begin(), original.end(), sig.causal[k]);
        if (it != original.end() && *it == sig.causal[k]) {
          const int64_t idx = it - original.begin();
          if (idx >= r0.start && idx <= r0.end) beta_r[idx - r0.start] = sig.beta[k];
        }
      }
      const double ratio = realized_condition_ratio(d.scores, r0, beta_r);
      out.condition_ratio.push_back(
          ratio / std::sqrt(std::log(static_cast<double>(d.scores.size()))));
    } else {
      out.condition_ratio.push_back(0.0);
    }
    if (cfg.progress) cfg.progress(rep + 1, cfg.replicates);
  }

  const auto summarize = [&](Method method, const std::vector<double>& det,
                             const std::vector<double>& jac) {
    PowerRow row;
    row.method = method;
    row.replicates = static_cast<int64_t>(det.size());
    const double r = static_cast<double>(det.size());
    for (const double v : det) row.detection_rate += v;
    for (const double v : jac) row.jaccard += v;
    row.detection_rate /= r;
    row.jaccard /= r;
    double vd = 0.0, vj = 0.0;
    for (const double v : det) vd += (v - row.detection_rate) * (v - row.detection_rate);
    for (const double v : jac) vj += (v - row.jaccard) * (v - row.jaccard);
    if (det.size() > 1) {
      vd /= r - 1.0;
      vj /= r - 1.0;
    }
    row.se_detection = std::sqrt(vd / r);
    row.se_jaccard = std::sqrt(vj / r);
    return row;
  };
  out.rows.push_back(summarize(Method::qscan, out.detection_q, out.jaccard_q));
  out.rows.push_back(summarize(Method::mscan, out.detection_m, out.jaccard_m));
  return out;
}

double paired_one_sided_pvalue(const std::vector<double>& q, const std::vector<double>& m) {
  if (q.size() != m.size()) throw DimensionError("paired samples differ in length");
  if (q.size() < 2) return 0.5;
  const auto r = static_cast<double>(q.size());
  double mean = 0.0;
  for (size_t i = 0; i < q.size(); ++i) mean += q[i] - m[i];
  mean /= r;
  double var = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double d = q[i] - m[i] - mean;
    var += d * d;
  }
  var /= r - 1.0;
  if (var == 0.0) return mean > 0.0 ? 0.0 : (mean < 0.0 ? 1.0 : 0.5);
  const double t = mean / std::sqrt(var / r);
  return normal_cdf(-t);
}

}  // namespace qscan
