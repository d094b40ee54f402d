#include <benchmark/benchmark.h>

#include "qscan/banded.hpp"
#include "qscan/null_model.hpp"
#include "qscan/scan.hpp"
#include "qscan/scores.hpp"
#include "qscan/simulate.hpp"
#include "qscan/threshold.hpp"

namespace {

using namespace qscan;

struct Fixture {
  FilterResult filt;
  NullModel model;
  ScoreSet scores;
  detail::WindowTables tables;

  explicit Fixture(int64_t n, int64_t p) {
    LdGenotypeModel ld;
    const GenotypeMatrix geno = generate_genotypes(ld, n, p, 7);
    const ContinuousSample s = simulate_continuous(geno, {}, {}, 8);
    model = fit_null_model(s.pheno, s.covar);
    filt = filter_variants(geno, 0.05, 1.0);
    scores = make_score_set(filt.geno, model, 199);
    tables = detail::build_window_tables(scores, 40, 200, true);
  }
};

const Fixture& fixture() {
  static const Fixture f(500, 5000);
  return f;
}

void BM_scan_all(benchmark::State& state) {
  const Fixture& f = fixture();
  const ScanConfig cfg{40, 200, Method::qscan};
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_max(f.scores, cfg, 1));
  }
  state.SetItemsProcessed(state.iterations() * 161 * f.scores.size());
}
BENCHMARK(BM_scan_all)->Unit(benchmark::kMillisecond);

void BM_mc_replicate(benchmark::State& state) {
  const Fixture& f = fixture();
  const PseudoScoreSampler sampler(f.filt.geno, f.model, f.scores);
  std::vector<double> u;
  uint64_t rep = 0;
  for (auto _ : state) {
    sampler.draw(11, rep++, u);
    double qmax = 0.0, mmax = 0.0;
    detail::table_scan_max(f.tables, u.data(), &qmax, &mmax);
    benchmark::DoNotOptimize(qmax + mmax);
  }
  state.SetItemsProcessed(state.iterations() * 161 * f.scores.size());
}
BENCHMARK(BM_mc_replicate)->Unit(benchmark::kMillisecond);

void BM_band_build(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_score_set(f.filt.geno, f.model, 199));
  }
}
BENCHMARK(BM_band_build)->Unit(benchmark::kMillisecond);

void BM_banded_cholesky(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(banded_cholesky(f.scores.cov));
  }
}
BENCHMARK(BM_banded_cholesky)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
