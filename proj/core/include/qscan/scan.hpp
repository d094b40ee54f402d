#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qscan/scores.hpp"

namespace qscan {

enum class Method { qscan, mscan };

inline const char* method_name(Method m) { return m == Method::qscan ? "qscan" : "mscan"; }

struct ScanConfig {
  int64_t l_min = 40;
  int64_t l_max = 200;
  Method method = Method::qscan;

  void validate(int64_t p) const;  // enforces 2 <= l_min <= l_max <= p
};

struct WindowStat {
  int64_t start = 0;  // inclusive, retained-variant index
  int64_t end = 0;    // inclusive
  double stat = 0.0;
  double trace = 0.0;  // sum of band diagonal over the window
  double frob2 = 0.0;  // squared Frobenius norm of the banded window block

  int64_t length() const { return end - start + 1; }
};

// Window moments streamed while a window grows one variant at a time.
struct WindowMoments {
  double sum_u = 0.0;
  double sum_u2 = 0.0;
  double trace = 0.0;
  double frob2 = 0.0;   // ||Sigma_I||_F^2 within the band
  double rowvar = 0.0;  // 1' Sigma_I 1 within the band
};

// Quadratic scan statistic: (sum U^2 - trace) / sqrt(2 frob2).
// Throws DegenerateWindowError when frob2 <= 0.
double q_stat(const WindowMoments& m);

// LD-aware mean statistic: (sum U)^2 / rowvar.
// Throws DegenerateWindowError when rowvar <= 0.
double m_stat(const WindowMoments& m);

struct ScanResult {
  std::vector<WindowStat> windows;
  int64_t n_windows = 0;  // emitted (non-skipped)
  int64_t n_skipped = 0;  // degenerate windows
};

// Every window statistic, in (start, length) enumeration order.
ScanResult scan_all(const ScoreSet& scores, const ScanConfig& cfg);

// Streaming variant: sink(WindowStat) is called in enumeration order and
// nothing is stored. Returns the skipped-window count.
int64_t scan_stream(const ScoreSet& scores, const ScanConfig& cfg,
                    const std::function<void(const WindowStat&)>& sink);

// Windows with stat > threshold (strict), plus counters; parallel over
// start-index chunks, output order identical to scan_all regardless of
// thread count.
ScanResult scan_candidates(const ScoreSet& scores, const ScanConfig& cfg, double threshold,
                           int threads);

struct ScanMax {
  double stat = 0.0;
  int64_t start = 0;
  int64_t end = 0;
};

// Maximum window statistic. Throws NoValidWindowError if no window of a
// valid length fits inside any chromosome block.
ScanMax scan_max(const ScoreSet& scores, const ScanConfig& cfg, int threads);

// Exact-summation reference: accumulates band terms one at a time in a fixed
// canonical order with compensated summation, extension cost O(window).
// Streaming a start forward replays the identical op sequence as a
// from-scratch run of the same window, so the two match bit for bit; the
// fast prefix-sum path agrees to documented tolerances. Used by tests.
ScanResult scan_all_exact(const ScoreSet& scores, const ScanConfig& cfg);

// From-scratch moments of one window under the same canonical order.
WindowMoments exact_window_moments(const BandedMatrix& cov, const double* u, int64_t s, int64_t e);

// Internals shared with the threshold module's Monte Carlo fast path.
namespace detail {

// Per-window trace and 1/sqrt(2 frob2) (and 1/rowvar when mscan), laid out
// per start so the per-replicate loop is a tight prefix-sum + multiply.
struct WindowTables {
  int64_t p = 0;
  int64_t l_min = 0;
  int64_t l_max = 0;
  std::vector<std::pair<int64_t, int64_t>> blocks;
  // For start s and length m = l_min+i: slot(s, i) = s*(l_max-l_min+1)+i.
  // Invalid or degenerate slots hold sentinels (huge trace with a tiny
  // positive inverse denominator, or a negative inverse variance) that pin
  // their stat far below any attainable value, keeping the max loop
  // branch-free.
  std::vector<double> q_trace;
  std::vector<double> q_invden;
  std::vector<double> m_invvar;  // mscan only
  bool with_mscan = false;

  int64_t n_lengths() const { return l_max - l_min + 1; }
};

WindowTables build_window_tables(const ScoreSet& scores, int64_t l_min, int64_t l_max,
                                 bool with_mscan);

// Max Q (and optionally max M) for one score vector against the tables.
void table_scan_max(const WindowTables& t, const double* u, double* qmax_out, double* mmax_out);

}  // namespace detail

}  // namespace qscan
