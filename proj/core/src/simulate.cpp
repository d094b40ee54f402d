#include "qscan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "qscan/errors.hpp"
#include "qscan/rng.hpp"

namespace qscan {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Acklam's rational approximation, polished with two Newton steps.
double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("normal quantile needs an argument in (0, 1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (u < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 0.97575) {
    const double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) x -= (normal_cdf(x) - u) / normal_pdf(x);
  return x;
}

struct GaussLegendre {
  std::vector<double> node, weight;
};

// Nodes and weights on [-1, 1] by Newton iteration on the Legendre recurrence.
const GaussLegendre& gauss_legendre_32() {
  static const GaussLegendre gl = [] {
    const int n = 32;
    GaussLegendre g;
    g.node.resize(n);
    g.weight.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int k = 0; k < n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      g.node[i] = -z;
      g.node[n - 1 - i] = z;
      g.weight[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      g.weight[n - 1 - i] = g.weight[i];
    }
    return g;
  }();
  return gl;
}

// P(Z1 <= q1, Z2 <= q2) for standard bivariate normals with correlation rho,
// as the quadrature of phi(z) Phi((q2 - rho z) / sqrt(1 - rho^2)) over
// z in [-8, q1].
double bvn_cdf(double q1, double q2, double rho) {
  if (rho >= 1.0) return normal_cdf(std::min(q1, q2));
  if (rho <= 0.0 && rho > -1e-12) return normal_cdf(q1) * normal_cdf(q2);
  const double s = std::sqrt(1.0 - rho * rho);
  const double lo = -8.0, hi = q1;
  if (hi <= lo) return 0.0;
  const GaussLegendre& gl = gauss_legendre_32();
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (size_t i = 0; i < gl.node.size(); ++i) {
    const double z = mid + half * gl.node[i];
    acc += gl.weight[i] * normal_pdf(z) * normal_cdf((q2 - rho * z) / s);
  }
  return acc * half;
}

double bvn_pdf(double q1, double q2, double rho) {
  const double s2 = 1.0 - rho * rho;
  return std::exp(-(q1 * q1 - 2.0 * rho * q1 * q2 + q2 * q2) / (2.0 * s2)) /
         (2.0 * kPi * std::sqrt(s2));
}

constexpr double kLatentRhoMax = 0.995;

// Latent correlation that makes two thresholded normals (carrier frequencies
// f1, f2) have allele-level correlation target, clamped to what the pair of
// frequencies admits. Newton with a bisection fallback; the allele
// correlation is increasing in the latent one.
double latent_rho_for_pair(double f1, double f2, double target) {
  if (target <= 0.0) return 0.0;
  const double q1 = normal_quantile(f1);
  const double q2 = normal_quantile(f2);
  const double denom = std::sqrt(f1 * (1.0 - f1) * f2 * (1.0 - f2));
  const auto corr = [&](double rho) { return (bvn_cdf(q1, q2, rho) - f1 * f2) / denom; };

  if (corr(kLatentRhoMax) <= target) return kLatentRhoMax;

  double rho = std::min(target, 0.9);
  bool converged = false;
  for (int it = 0; it < 30; ++it) {
    const double err = corr(rho) - target;
    if (std::abs(err) < 1e-9) {
      converged = true;
      break;
    }
    const double deriv = bvn_pdf(q1, q2, rho) / denom;
    if (!(deriv > 0.0)) break;
    rho = std::min(kLatentRhoMax, std::max(0.0, rho - err / deriv));
  }
  if (!converged) {
    double lo = 0.0, hi = kLatentRhoMax;
    for (int it = 0; it < 60; ++it) {
      rho = 0.5 * (lo + hi);
      (corr(rho) < target ? lo : hi) = rho;
    }
  }
  return rho;
}

std::string padded_id(const char* prefix, int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06lld", prefix, static_cast<long long>(i));
  return buf;
}

}  // namespace

GenotypeMatrix generate_genotypes(const LdGenotypeModel& model, int64_t n, int64_t p,
                                  uint64_t seed) {
  if (n < 1 || p < 1) throw ConfigError("need at least one sample and one variant");
  const int64_t n_hap = model.n_haplotypes > 0 ? model.n_haplotypes : 2 * n;
  if (n_hap < 2 * n) throw ConfigError("haplotype pool must hold at least 2n haplotypes");
  const double maf_min = model.maf_min > 0.0 ? model.maf_min : 0.5 / static_cast<double>(n);
  if (!(maf_min <= model.maf_max && model.maf_max <= 0.5)) {
    throw ConfigError("need 0 < maf_min <= maf_max <= 0.5");
  }
  if (!(model.ld_rho >= 0.0 && model.ld_rho < 1.0)) {
    throw ConfigError("ld_rho must lie in [0, 1)");
  }
  if (model.block_len < 1) throw ConfigError("block_len must be positive");

  Rng rng(seed, 0);

  // draw MAFs (log-uniform), thresholds, and per-pair latent correlations
  std::vector<double> maf(p), thresh(p);
  const double log_lo = std::log(maf_min), log_hi = std::log(model.maf_max);
  for (int64_t j = 0; j < p; ++j) {
    maf[j] = std::exp(log_lo + rng.uniform() * (log_hi - log_lo));
    thresh[j] = normal_quantile(maf[j]);
  }
  std::vector<double> pair_rho(p > 1 ? p - 1 : 0, 0.0);
  for (int64_t j = 0; j + 1 < p; ++j) {
    if ((j + 1) % model.block_len == 0) continue;  // chain restarts at block edges
    pair_rho[j] = latent_rho_for_pair(maf[j], maf[j + 1], model.ld_rho);
  }

  // haplotype carrier lists per variant
  std::vector<std::vector<int32_t>> carriers(p);
  for (int64_t b0 = 0; b0 < p; b0 += model.block_len) {
    const int64_t b1 = std::min(p, b0 + model.block_len);
    for (int64_t h = 0; h < n_hap; ++h) {
      double z = rng.normal();
      if (z <= thresh[b0]) carriers[b0].push_back(static_cast<int32_t>(h));
      for (int64_t j = b0 + 1; j < b1; ++j) {
        const double r = pair_rho[j - 1];
        z = r * z + std::sqrt(1.0 - r * r) * rng.normal();
        if (z <= thresh[j]) carriers[j].push_back(static_cast<int32_t>(h));
      }
    }
  }

  // pair haplotypes into diploids; a larger pool donates a random subset
  std::vector<int32_t> owner(n_hap, -1);
  if (n_hap == 2 * n) {
    for (int64_t h = 0; h < n_hap; ++h) owner[h] = static_cast<int32_t>(h / 2);
  } else {
    std::vector<int64_t> pool(n_hap);
    for (int64_t h = 0; h < n_hap; ++h) pool[h] = h;
    for (int64_t k = 0; k < 2 * n; ++k) {
      const int64_t pick = k + static_cast<int64_t>(rng.uniform_int(n_hap - k));
      std::swap(pool[k], pool[pick]);
      owner[pool[k]] = static_cast<int32_t>(k / 2);
    }
  }

  GenotypeMatrix geno;
  geno.n_samples = n;
  geno.chrom_names = {"1"};
  geno.sample_ids.resize(n);
  for (int64_t i = 0; i < n; ++i) geno.sample_ids[i] = padded_id("s", i + 1);
  geno.chrom_id.assign(p, 0);
  geno.pos.resize(p);
  geno.variant_ids.resize(p);
  geno.maf.resize(p);
  geno.cols.resize(p);
  std::vector<std::pair<int32_t, double>> hits;
  for (int64_t j = 0; j < p; ++j) {
    geno.pos[j] = (j + 1) * 100;
    geno.variant_ids[j] = padded_id("v", j + 1);
    hits.clear();
    for (const int32_t h : carriers[j]) {
      if (owner[h] >= 0) hits.emplace_back(owner[h], 1.0);
    }
    std::sort(hits.begin(), hits.end());
    SparseCol& col = geno.cols[j];
    for (const auto& [i, v] : hits) {
      if (!col.idx.empty() && col.idx.back() == i) {
        col.val.back() += v;
      } else {
        col.idx.push_back(i);
        col.val.push_back(v);
      }
    }
  }
  geno.recompute_maf();
  return geno;
}

PlantedSignal plant_signals(const GenotypeMatrix& geno, const SignalSpec& spec, uint64_t seed) {
  const int64_t p = geno.n_variants();
  if (spec.n_regions < 1) throw ConfigError("need at least one signal region");
  if (spec.region_len_min < 1 || spec.region_len_max < spec.region_len_min) {
    throw ConfigError("need 1 <= region_len_min <= region_len_max");
  }
  if (!(spec.xi > 0.0 && spec.xi <= 1.0)) throw ConfigError("xi must lie in (0, 1]");
  if (!(spec.sign_mix >= 0.0 && spec.sign_mix <= 1.0)) {
    throw ConfigError("sign_mix must lie in [0, 1]");
  }
  if (spec.region_len_max > p) throw PlacementError("regions cannot be longer than the panel");

  Rng rng(seed, 0);
  PlantedSignal out;
  const int64_t max_attempts = 20000;
  int64_t attempts = 0;
  while (static_cast<int>(out.regions.size()) < spec.n_regions) {
    if (++attempts > max_attempts) {
      throw PlacementError("could not place " + std::to_string(spec.n_regions) +
                           " regions with min_gap " + std::to_string(spec.min_gap) + " in " +
                           std::to_string(p) + " variants");
    }
    const int64_t len =
        spec.region_len_min +
        static_cast<int64_t>(rng.uniform_int(spec.region_len_max - spec.region_len_min + 1));
    const int64_t start = static_cast<int64_t>(rng.uniform_int(p - len + 1));
    const int64_t end = start + len - 1;
    if (geno.chrom_id[start] != geno.chrom_id[end]) continue;
    bool ok = true;
    for (const Interval& r : out.regions) {
      const int64_t between = r.start > end ? r.start - end - 1 : start - r.end - 1;
      if (between < spec.min_gap) {
        ok = false;
        break;
      }
    }
    if (ok) out.regions.push_back(Interval{start, end});
  }
  std::sort(out.regions.begin(), out.regions.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });

  for (const Interval& r : out.regions) {
    const int64_t p0 = r.size();
    int64_t s = std::llround(std::pow(static_cast<double>(p0), spec.xi));
    s = std::min(p0, std::max<int64_t>(1, s));
    std::vector<int64_t> offsets(p0);
    for (int64_t t = 0; t < p0; ++t) offsets[t] = t;
    for (int64_t k = 0; k < s; ++k) {
      const int64_t pick = k + static_cast<int64_t>(rng.uniform_int(p0 - k));
      std::swap(offsets[k], offsets[pick]);
    }
    std::sort(offsets.begin(), offsets.begin() + s);
    for (int64_t k = 0; k < s; ++k) out.causal.push_back(r.start + offsets[k]);
  }

  out.beta.resize(out.causal.size());
  for (size_t k = 0; k < out.causal.size(); ++k) {
    const double f = geno.maf[out.causal[k]];
    const double mag = f > 0.0 ? std::abs(spec.effect_c * std::log10(f)) : 0.0;
    const double sign = rng.uniform() < spec.sign_mix ? 1.0 : -1.0;
    out.beta[k] = sign * mag;
  }
  return out;
}

namespace {

void add_genetic_effects(const GenotypeMatrix& geno, const std::vector<int64_t>& causal,
                         const std::vector<double>& beta, std::vector<double>& lin) {
  if (causal.size() != beta.size()) {
    throw DimensionError("causal index and effect size lists differ in length");
  }
  for (size_t k = 0; k < causal.size(); ++k) {
    const int64_t j = causal[k];
    if (j < 0 || j >= geno.n_variants()) throw DimensionError("causal index out of range");
    const SparseCol& col = geno.cols[j];
    for (size_t t = 0; t < col.idx.size(); ++t) lin[col.idx[t]] += col.val[t] * beta[k];
  }
}

CovariateMatrix make_covar(const std::vector<double>& x1, const std::vector<double>& x2,
                           const std::vector<int64_t>* rows) {
  const int64_t n = rows ? static_cast<int64_t>(rows->size()) : static_cast<int64_t>(x1.size());
  CovariateMatrix covar;
  covar.values.resize(n, 3);
  covar.column_names = {"intercept", "x1", "x2"};
  for (int64_t i = 0; i < n; ++i) {
    const int64_t src = rows ? (*rows)[i] : i;
    covar.values(i, 0) = 1.0;
    covar.values(i, 1) = x1[src];
    covar.values(i, 2) = x2[src];
  }
  return covar;
}

}  // namespace

ContinuousSample simulate_continuous(const GenotypeMatrix& geno, const std::vector<int64_t>& causal,
                                     const std::vector<double>& beta, uint64_t seed) {
  const int64_t n = geno.n_samples;
  Rng rng(seed, 0);
  std::vector<double> x1(n), x2(n);
  for (int64_t i = 0; i < n; ++i) x1[i] = rng.normal();
  for (int64_t i = 0; i < n; ++i) x2[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;

  std::vector<double> y(n);
  for (int64_t i = 0; i < n; ++i) y[i] = 0.5 * x1[i] + 0.5 * x2[i] + rng.normal();
  add_genetic_effects(geno, causal, beta, y);

  ContinuousSample out;
  out.pheno.family = Family::gaussian;
  out.pheno.values = std::move(y);
  out.covar = make_covar(x1, x2, nullptr);
  return out;
}

BinarySample simulate_binary(const GenotypeMatrix& geno, const std::vector<int64_t>& causal,
                             const std::vector<double>& beta, int64_t n_cases, int64_t n_controls,
                             uint64_t seed, double logit_intercept) {
  const int64_t pop = geno.n_samples;
  if (n_cases < 1 || n_controls < 1) throw ConfigError("need at least one case and one control");
  if (n_cases + n_controls > pop) {
    throw ConfigError("requested more samples than the population holds");
  }
  Rng rng(seed, 0);
  std::vector<double> x1(pop), x2(pop);
  for (int64_t i = 0; i < pop; ++i) x1[i] = rng.normal();
  for (int64_t i = 0; i < pop; ++i) x2[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;

  std::vector<double> lin(pop);
  for (int64_t i = 0; i < pop; ++i) lin[i] = logit_intercept + 0.5 * x1[i] + 0.5 * x2[i];
  add_genetic_effects(geno, causal, beta, lin);

  std::vector<int64_t> cases, controls;
  for (int attempt = 0; attempt < 2; ++attempt) {
    cases.clear();
    controls.clear();
    for (int64_t i = 0; i < pop; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-lin[i]));
      (rng.uniform() < prob ? cases : controls).push_back(i);
    }
    if (static_cast<int64_t>(cases.size()) >= n_cases &&
        static_cast<int64_t>(controls.size()) >= n_controls) {
      break;
    }
    if (attempt == 1) {
      throw SamplingError("population of " + std::to_string(pop) + " yielded " +
                          std::to_string(cases.size()) + " cases and " +
                          std::to_string(controls.size()) + " controls; need " +
                          std::to_string(n_cases) + " / " + std::to_string(n_controls));
    }
  }

  const auto take = [&rng](std::vector<int64_t>& from, int64_t k) {
    for (int64_t t = 0; t < k; ++t) {
      const int64_t pick =
          t + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(from.size() - t)));
      std::swap(from[t], from[pick]);
    }
    from.resize(k);
  };
  take(cases, n_cases);
  take(controls, n_controls);

  BinarySample out;
  out.rows.reserve(n_cases + n_controls);
  out.rows.insert(out.rows.end(), cases.begin(), cases.end());
  out.rows.insert(out.rows.end(), controls.begin(), controls.end());
  std::sort(out.rows.begin(), out.rows.end());

  std::vector<char> is_case(pop, 0);
  for (const int64_t i : cases) is_case[i] = 1;
  out.pheno.family = Family::binomial;
  out.pheno.values.resize(out.rows.size());
  for (size_t i = 0; i < out.rows.size(); ++i) out.pheno.values[i] = is_case[out.rows[i]];
  out.covar = make_covar(x1, x2, &out.rows);
  return out;
}

}  // namespace qscan
