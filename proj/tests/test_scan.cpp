#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "qscan/banded.hpp"
#include "qscan/rng.hpp"
#include "qscan/scan.hpp"

using namespace qscan;

namespace {

WindowMoments moments(double sum_u, double sum_u2, double trace, double frob2, double rowvar) {
  WindowMoments m;
  m.sum_u = sum_u;
  m.sum_u2 = sum_u2;
  m.trace = trace;
  m.frob2 = frob2;
  m.rowvar = rowvar;
  return m;
}

// flips variant j's coding inside a score set: u_j and every off-diagonal
// covariance entry touching j change sign, the diagonal stays
ScoreSet flip_variant(ScoreSet s, int64_t j) {
  s.u[j] = -s.u[j];
  const int64_t bw = s.cov.bandwidth();
  for (int64_t d = 1; d <= bw && j + d < s.cov.dim(); ++d) s.cov.row(j)[d] = -s.cov.row(j)[d];
  for (int64_t i = std::max<int64_t>(0, j - bw); i < j; ++i) {
    s.cov.row(i)[j - i] = -s.cov.row(i)[j - i];
  }
  return s;
}

}  // namespace

TEST_CASE("quadratic statistic closed forms") {
  // zero scores against an identity covariance of size m
  for (int64_t m = 2; m <= 6; ++m) {
    const double q = q_stat(moments(0, 0, static_cast<double>(m), static_cast<double>(m), m));
    CHECK(q == doctest::Approx(-std::sqrt(m / 2.0)).epsilon(1e-14));
  }
  CHECK(q_stat(moments(0, 0, 2, 2, 2)) == doctest::Approx(-1.0).epsilon(1e-14));
  // single variant, unit variance, score 2
  CHECK(q_stat(moments(2, 4, 1, 1, 1)) == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("mean statistic closed forms") {
  CHECK(m_stat(moments(2, 4, 1, 1, 1)) == doctest::Approx(4.0).epsilon(1e-14));
  // two independent unit-variance variants with opposite scores cancel
  CHECK(m_stat(moments(0, 2, 2, 2, 2)) == 0.0);
}

TEST_CASE("degenerate windows raise errors") {
  CHECK_THROWS_AS(q_stat(moments(0, 0, 0, 0, 0)), DegenerateWindowError);
  CHECK_THROWS_AS(m_stat(moments(1, 1, 1, 1, 0)), DegenerateWindowError);
}

TEST_CASE("config validation") {
  ScanConfig cfg;
  cfg.l_min = 1;
  CHECK_THROWS_AS(cfg.validate(100), ConfigError);
  cfg.l_min = 50;
  cfg.l_max = 40;
  CHECK_THROWS_AS(cfg.validate(100), ConfigError);
  cfg.l_max = 200;
  CHECK_THROWS_AS(cfg.validate(100), ConfigError);
  cfg.l_min = 2;
  cfg.l_max = 100;
  CHECK_NOTHROW(cfg.validate(100));
}

TEST_CASE("window enumeration for a tiny sequence") {
  const ScoreSet s = testutil::synthetic_score_set(5, 4, 3);
  ScanConfig cfg;
  cfg.l_min = 2;
  cfg.l_max = 3;
  const ScanResult res = scan_all(s, cfg);
  const std::vector<std::pair<int64_t, int64_t>> expect = {
      {0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 4}};
  REQUIRE(res.windows.size() == expect.size());
  CHECK(res.n_windows == 7);
  for (size_t i = 0; i < expect.size(); ++i) {
    CHECK(res.windows[i].start == expect[i].first);
    CHECK(res.windows[i].end == expect[i].second);
    CHECK(res.windows[i].length() == expect[i].second - expect[i].first + 1);
  }
}

TEST_CASE("streamed statistics match the brute-force reference") {
  const ScoreSet s = testutil::synthetic_score_set(160, 59, 17);
  for (const Method method : {Method::qscan, Method::mscan}) {
    ScanConfig cfg;
    cfg.l_min = 5;
    cfg.l_max = 60;
    cfg.method = method;
    const ScanResult fast = scan_all(s, cfg);
    const std::vector<WindowStat> slow = testutil::brute_force_scan(s, cfg);
    REQUIRE(fast.windows.size() == slow.size());
    for (size_t i = 0; i < slow.size(); ++i) {
      CHECK(fast.windows[i].start == slow[i].start);
      CHECK(fast.windows[i].end == slow[i].end);
      CHECK(fast.windows[i].stat ==
            doctest::Approx(slow[i].stat).epsilon(1e-10));
      CHECK(fast.windows[i].trace == doctest::Approx(slow[i].trace).epsilon(1e-10));
      CHECK(fast.windows[i].frob2 == doctest::Approx(slow[i].frob2).epsilon(1e-10));
    }
  }
}

TEST_CASE("every window statistic matches an eigendecomposition of its block") {
  const ScoreSet s = testutil::synthetic_score_set(60, 12, 29);
  ScanConfig cfg;
  cfg.l_min = 2;
  cfg.l_max = 12;
  const ScanResult res = scan_all(s, cfg);
  Eigen::Map<const Eigen::VectorXd> u(s.u.data(), s.size());
  for (const WindowStat& w : res.windows) {
    const Eigen::MatrixXd block = testutil::window_block(s.cov, w.start, w.end);
    const double oracle = testutil::eigen_q_stat(block, u.segment(w.start, w.length()));
    CHECK(w.stat == doctest::Approx(oracle).epsilon(1e-10));
    // trace and Frobenius moments against the eigenvalues themselves
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
    CHECK(w.trace == doctest::Approx(es.eigenvalues().sum()).epsilon(1e-8));
    CHECK(w.frob2 == doctest::Approx(es.eigenvalues().squaredNorm()).epsilon(1e-8));
  }
}

TEST_CASE("exact-summation scan replays from-scratch accumulation bit for bit") {
  const ScoreSet s = testutil::synthetic_score_set(90, 30, 41);
  for (const Method method : {Method::qscan, Method::mscan}) {
    ScanConfig cfg;
    cfg.l_min = 3;
    cfg.l_max = 31;
    cfg.method = method;
    const ScanResult res = scan_all_exact(s, cfg);
    for (const WindowStat& w : res.windows) {
      const WindowMoments m = exact_window_moments(s.cov, s.u.data(), w.start, w.end);
      const double stat = method == Method::qscan ? q_stat(m) : m_stat(m);
      CHECK(w.stat == stat);  // bitwise: identical op sequence
      CHECK(w.trace == m.trace);
      CHECK(w.frob2 == m.frob2);
    }
  }
}

TEST_CASE("windows never cross chromosome boundaries") {
  const ScoreSet s = testutil::synthetic_score_set(100, 20, 53, 2);
  ScanConfig cfg;
  cfg.l_min = 4;
  cfg.l_max = 21;
  const ScanResult res = scan_all(s, cfg);
  int64_t expect = 0;
  for (int64_t len = cfg.l_min; len <= cfg.l_max; ++len) expect += 2 * (50 - len + 1);
  CHECK(res.n_windows == expect);
  for (const WindowStat& w : res.windows) {
    CHECK(s.chrom_id[w.start] == s.chrom_id[w.end]);
  }
}

TEST_CASE("degenerate windows are skipped and counted, not fatal") {
  ScoreSet s = testutil::synthetic_score_set(60, 10, 61, 2);
  // erase the second chromosome's covariance entirely
  for (int64_t j = 30; j < 60; ++j) {
    for (int64_t d = 0; d <= 10; ++d) s.cov.row(j)[d] = 0.0;
  }
  ScanConfig cfg;
  cfg.l_min = 5;
  cfg.l_max = 10;
  int64_t block_windows = 0;
  for (int64_t len = cfg.l_min; len <= cfg.l_max; ++len) block_windows += 30 - len + 1;
  for (const Method method : {Method::qscan, Method::mscan}) {
    cfg.method = method;
    const ScanResult res = scan_all(s, cfg);
    CHECK(res.n_skipped == block_windows);
    CHECK(res.n_windows == block_windows);
    for (const WindowStat& w : res.windows) CHECK(w.end < 30);
    const ScanMax mx = scan_max(s, cfg, 1);
    CHECK(mx.end < 30);
  }
}

TEST_CASE("maximum matches brute force and lands on the right window") {
  const ScoreSet s = testutil::synthetic_score_set(200, 49, 71);
  for (const Method method : {Method::qscan, Method::mscan}) {
    ScanConfig cfg;
    cfg.l_min = 8;
    cfg.l_max = 50;
    cfg.method = method;
    const std::vector<WindowStat> slow = testutil::brute_force_scan(s, cfg);
    const WindowStat* best = &slow[0];
    for (const WindowStat& w : slow) {
      if (w.stat > best->stat) best = &w;
    }
    const ScanMax mx = scan_max(s, cfg, 1);
    CHECK(mx.stat == doctest::Approx(best->stat).epsilon(1e-10));
    CHECK(mx.start == best->start);
    CHECK(mx.end == best->end);
  }
}

TEST_CASE("zero scores against an identity band maximize at the shortest window") {
  ScoreSet s = testutil::synthetic_score_set(80, 15, 5);
  for (int64_t j = 0; j < 80; ++j) {
    s.u[j] = 0.0;
    s.cov.row(j)[0] = 1.0;
    for (int64_t d = 1; d <= 15; ++d) s.cov.row(j)[d] = 0.0;
  }
  ScanConfig cfg;
  cfg.l_min = 6;
  cfg.l_max = 16;
  const ScanMax mx = scan_max(s, cfg, 1);
  CHECK(mx.stat == doctest::Approx(-std::sqrt(6.0 / 2.0)).epsilon(1e-12));
  CHECK(mx.end - mx.start + 1 == cfg.l_min);
}

TEST_CASE("candidate collection is identical across thread counts") {
  const ScoreSet s = testutil::synthetic_score_set(400, 39, 83);
  ScanConfig cfg;
  cfg.l_min = 10;
  cfg.l_max = 40;
  const ScanResult all = scan_all(s, cfg);
  std::vector<double> stats;
  for (const WindowStat& w : all.windows) stats.push_back(w.stat);
  std::nth_element(stats.begin(), stats.begin() + stats.size() / 2, stats.end());
  const double h = stats[stats.size() / 2];

  const ScanResult one = scan_candidates(s, cfg, h, 1);
  const ScanResult four = scan_candidates(s, cfg, h, 4);
  REQUIRE(one.windows.size() == four.windows.size());
  for (size_t i = 0; i < one.windows.size(); ++i) {
    CHECK(one.windows[i].start == four.windows[i].start);
    CHECK(one.windows[i].end == four.windows[i].end);
    CHECK(one.windows[i].stat == four.windows[i].stat);  // bitwise
    CHECK(one.windows[i].stat > h);
  }
  // and it is exactly the strict filter of the full enumeration
  std::vector<const WindowStat*> expect;
  for (const WindowStat& w : all.windows) {
    if (w.stat > h) expect.push_back(&w);
  }
  REQUIRE(one.windows.size() == expect.size());
  for (size_t i = 0; i < expect.size(); ++i) {
    CHECK(one.windows[i].start == expect[i]->start);
    CHECK(one.windows[i].end == expect[i]->end);
  }
  CHECK(scan_max(s, cfg, 1).stat == scan_max(s, cfg, 3).stat);
}

TEST_CASE("no block long enough for a window is an error") {
  const ScoreSet s = testutil::synthetic_score_set(50, 20, 91, 2);  // blocks of 25
  ScanConfig cfg;
  cfg.l_min = 30;
  cfg.l_max = 40;
  CHECK(scan_all(s, cfg).n_windows == 0);
  CHECK_THROWS_AS(scan_max(s, cfg, 1), NoValidWindowError);
  CHECK_THROWS_AS(detail::build_window_tables(s, cfg.l_min, cfg.l_max, false),
                  NoValidWindowError);
}

TEST_CASE("table lookup maximum agrees with the streaming maximum") {
  ScoreSet s = testutil::synthetic_score_set(300, 99, 101, 2);
  // degenerate stretch inside the first block exercises the sentinel slots
  for (int64_t j = 40; j < 60; ++j) {
    for (int64_t d = 0; d <= 99 && j + d < 300; ++d) s.cov.row(j)[d] = 0.0;
    for (int64_t i = std::max<int64_t>(0, j - 99); i < j; ++i) s.cov.row(i)[j - i] = 0.0;
    s.u[j] = 0.0;
  }
  ScanConfig cfg;
  cfg.l_min = 10;
  cfg.l_max = 100;
  const detail::WindowTables t = detail::build_window_tables(s, cfg.l_min, cfg.l_max, true);
  double qmax = 0.0, mmax = 0.0;
  detail::table_scan_max(t, s.u.data(), &qmax, &mmax);
  cfg.method = Method::qscan;
  CHECK(qmax == doctest::Approx(scan_max(s, cfg, 1).stat).epsilon(1e-10));
  cfg.method = Method::mscan;
  CHECK(mmax == doctest::Approx(scan_max(s, cfg, 1).stat).epsilon(1e-10));
}

TEST_CASE("flipping one variant's coding leaves Q invariant but changes M") {
  const ScoreSet s = testutil::synthetic_score_set(80, 25, 111);
  const ScoreSet flipped = flip_variant(s, 37);
  ScanConfig cfg;
  cfg.l_min = 5;
  cfg.l_max = 26;
  const ScanResult q0 = scan_all(s, cfg);
  const ScanResult q1 = scan_all(flipped, cfg);
  REQUIRE(q0.windows.size() == q1.windows.size());
  for (size_t i = 0; i < q0.windows.size(); ++i) {
    CHECK(q1.windows[i].stat == doctest::Approx(q0.windows[i].stat).epsilon(1e-12));
  }
  cfg.method = Method::mscan;
  const ScanResult m0 = scan_all(s, cfg);
  const ScanResult m1 = scan_all(flipped, cfg);
  bool any_changed = false;
  for (size_t i = 0; i < m0.windows.size(); ++i) {
    const WindowStat& a = m0.windows[i];
    if (a.start <= 37 && 37 <= a.end &&
        std::abs(a.stat - m1.windows[i].stat) > 1e-9 * std::max(1.0, std::abs(a.stat))) {
      any_changed = true;
    }
  }
  CHECK(any_changed);
}

TEST_CASE("null scores give standardized window statistics") {
  // U ~ N(0, Sigma) makes Q(I) exactly centered and unit variance
  const int64_t p = 70, bw = 69;
  const BandedMatrix cov = testutil::random_psd_band(p, bw, 2023);
  const BandedMatrix factor = banded_cholesky(cov);
  const int64_t s = 5, e = 64;
  const int reps = 4000;
  std::vector<double> z(p), u(p), qs;
  qs.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    Rng rng(2024, static_cast<uint64_t>(r));
    for (double& v : z) v = rng.normal();
    banded_lower_multiply(factor, z.data(), u.data());
    qs.push_back(q_stat(exact_window_moments(cov, u.data(), s, e)));
  }
  const double mean = testutil::mean_of(qs);
  const double var = testutil::variance_of(qs);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(var / reps));
  CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}
