#include "qscan/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qscan/parallel.hpp"

namespace qscan {

void ScanConfig::validate(int64_t p) const {
  if (l_min < 2) throw ConfigError("l_min must be >= 2 (windows of one variant are not scanned)");
  if (l_max < l_min) throw ConfigError("l_max must be >= l_min");
  if (l_max > p) {
    throw ConfigError("l_max (" + std::to_string(l_max) + ") exceeds the variant count (" +
                      std::to_string(p) + ")");
  }
}

double q_stat(const WindowMoments& m) {
  if (!(m.frob2 > 0.0)) {
    throw DegenerateWindowError("window covariance has zero Frobenius norm");
  }
  return (m.sum_u2 - m.trace) / std::sqrt(2.0 * m.frob2);
}

double m_stat(const WindowMoments& m) {
  if (!(m.rowvar > 0.0)) {
    throw DegenerateWindowError("window variance of the score sum is not positive");
  }
  return (m.sum_u * m.sum_u) / m.rowvar;
}

namespace {

// ---------- incremental walker ----------
// Walks every window [s, e] with length in [l_min, l_max] inside each
// chromosome block, in (start asc, length asc) order, and hands the sink the
// streamed moments. Window extension is O(1): per-column prefix sums of the
// band (values and squares) live in a ring buffer over the last l_max
// columns, so extending [s, e-1] by column e adds
//   trace  += d_e,          frob2 += d_e^2 + 2 * pc2_e[e-s],
//   rowvar += d_e + 2 * pc1_e[e-s]
// where pc*_e[d] sums the d band entries directly above the diagonal in
// column e. Building each column's prefixes costs O(bandwidth) once.
template <class Sink>
void walk(const BandedMatrix& cov, const double* u,
          const std::vector<std::pair<int64_t, int64_t>>& blocks, int64_t l_min, int64_t l_max,
          int64_t start_lo, int64_t start_hi, Sink&& sink) {
  const int64_t bw = cov.bandwidth();
  const int64_t depth = std::min(bw, l_max - 1);  // deepest prefix a window can ask for
  const int64_t slot_len = depth + 1;
  std::vector<double> pc1(static_cast<size_t>(l_max) * slot_len);
  std::vector<double> pc2(static_cast<size_t>(l_max) * slot_len);

  for (const auto& [b0, b1] : blocks) {
    if (b1 - b0 < l_min) continue;
    const int64_t s_lo = std::max(b0, start_lo);
    const int64_t s_hi = std::min(b1 - l_min + 1, start_hi);
    if (s_lo >= s_hi) continue;

    int64_t next_col = s_lo;
    for (int64_t s = s_lo; s < s_hi; ++s) {
      const int64_t e_last = std::min(s + l_max, b1) - 1;
      for (; next_col <= e_last; ++next_col) {
        double* p1 = pc1.data() + (next_col % l_max) * slot_len;
        double* p2 = pc2.data() + (next_col % l_max) * slot_len;
        p1[0] = 0.0;
        p2[0] = 0.0;
        const int64_t dmax = std::min(depth, next_col - b0);
        double r1 = 0.0, r2 = 0.0;
        for (int64_t d = 1; d <= dmax; ++d) {
          const double v = cov.row(next_col - d)[d];
          r1 += v;
          r2 += v * v;
          p1[d] = r1;
          p2[d] = r2;
        }
      }

      WindowMoments m;
      const double d0 = cov.diag(s);
      m.trace = d0;
      m.frob2 = d0 * d0;
      m.rowvar = d0;
      if (u) {
        m.sum_u = u[s];
        m.sum_u2 = u[s] * u[s];
      }
      for (int64_t e = s + 1; e <= e_last; ++e) {
        const int64_t dd = std::min(e - s, depth);
        const double* p1 = pc1.data() + (e % l_max) * slot_len;
        const double* p2 = pc2.data() + (e % l_max) * slot_len;
        const double dg = cov.diag(e);
        m.trace += dg;
        m.frob2 += dg * dg + 2.0 * p2[dd];
        m.rowvar += dg + 2.0 * p1[dd];
        if (u) {
          m.sum_u += u[e];
          m.sum_u2 += u[e] * u[e];
        }
        if (e - s + 1 >= l_min) sink(s, e, m);
      }
    }
  }
}

struct StatEval {
  Method method;
  // Returns true and fills stat when the window is non-degenerate.
  bool operator()(const WindowMoments& m, double& stat) const {
    if (method == Method::qscan) {
      if (!(m.frob2 > 0.0)) return false;
      stat = (m.sum_u2 - m.trace) / std::sqrt(2.0 * m.frob2);
    } else {
      if (!(m.rowvar > 0.0)) return false;
      stat = (m.sum_u * m.sum_u) / m.rowvar;
    }
    return true;
  }
};

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

ScanResult scan_all(const ScoreSet& scores, const ScanConfig& cfg) {
  cfg.validate(scores.size());
  ScanResult out;
  const StatEval eval{cfg.method};
  walk(scores.cov, scores.u.data(), scores.chrom_blocks(), cfg.l_min, cfg.l_max, 0, scores.size(),
       [&](int64_t s, int64_t e, const WindowMoments& m) {
         double stat;
         if (!eval(m, stat)) {
           ++out.n_skipped;
           return;
         }
         out.windows.push_back(WindowStat{s, e, stat, m.trace, m.frob2});
         ++out.n_windows;
       });
  return out;
}

int64_t scan_stream(const ScoreSet& scores, const ScanConfig& cfg,
                    const std::function<void(const WindowStat&)>& sink) {
  cfg.validate(scores.size());
  int64_t skipped = 0;
  const StatEval eval{cfg.method};
  walk(scores.cov, scores.u.data(), scores.chrom_blocks(), cfg.l_min, cfg.l_max, 0, scores.size(),
       [&](int64_t s, int64_t e, const WindowMoments& m) {
         double stat;
         if (!eval(m, stat)) {
           ++skipped;
           return;
         }
         sink(WindowStat{s, e, stat, m.trace, m.frob2});
       });
  return skipped;
}

ScanResult scan_candidates(const ScoreSet& scores, const ScanConfig& cfg, double threshold,
                           int threads) {
  cfg.validate(scores.size());
  threads = resolve_threads(threads);
  const int64_t p = scores.size();
  const int64_t n_chunks = std::min<int64_t>(p, std::max<int64_t>(1, threads * 4));
  const auto blocks = scores.chrom_blocks();
  const StatEval eval{cfg.method};

  std::vector<ScanResult> parts(n_chunks);
  parallel_for(n_chunks, threads, [&](int64_t c) {
    const int64_t lo = p * c / n_chunks;
    const int64_t hi = p * (c + 1) / n_chunks;
    ScanResult& part = parts[c];
    walk(scores.cov, scores.u.data(), blocks, cfg.l_min, cfg.l_max, lo, hi,
         [&](int64_t s, int64_t e, const WindowMoments& m) {
           double stat;
           if (!eval(m, stat)) {
             ++part.n_skipped;
             return;
           }
           ++part.n_windows;
           if (stat > threshold) part.windows.push_back(WindowStat{s, e, stat, m.trace, m.frob2});
         });
  });

  ScanResult out;
  for (auto& part : parts) {
    out.n_windows += part.n_windows;
    out.n_skipped += part.n_skipped;
    out.windows.insert(out.windows.end(), part.windows.begin(), part.windows.end());
  }
  return out;
}

ScanMax scan_max(const ScoreSet& scores, const ScanConfig& cfg, int threads) {
  cfg.validate(scores.size());
  threads = resolve_threads(threads);
  const int64_t p = scores.size();
  const int64_t n_chunks = std::min<int64_t>(p, std::max<int64_t>(1, threads * 4));
  const auto blocks = scores.chrom_blocks();
  const StatEval eval{cfg.method};

  struct Best {
    double stat = -std::numeric_limits<double>::infinity();
    int64_t start = -1, end = -1;
  };
  std::vector<Best> bests(n_chunks);
  parallel_for(n_chunks, threads, [&](int64_t c) {
    const int64_t lo = p * c / n_chunks;
    const int64_t hi = p * (c + 1) / n_chunks;
    Best& b = bests[c];
    walk(scores.cov, scores.u.data(), blocks, cfg.l_min, cfg.l_max, lo, hi,
         [&](int64_t s, int64_t e, const WindowMoments& m) {
           double stat;
           if (!eval(m, stat)) return;
           // enumeration order makes strict > the (start asc, length asc)
           // tie-break
           if (stat > b.stat) b = Best{stat, s, e};
         });
  });

  Best best;
  for (const Best& b : bests) {
    if (b.start < 0) continue;
    const bool better = b.stat > best.stat ||
                        (b.stat == best.stat &&
                         (b.start < best.start || (b.start == best.start && b.end < best.end)));
    if (best.start < 0 || better) best = b;
  }
  if (best.start < 0) {
    throw NoValidWindowError("no window of length in [" + std::to_string(cfg.l_min) + ", " +
                             std::to_string(cfg.l_max) + "] fits in any chromosome block");
  }
  return ScanMax{best.stat, best.start, best.end};
}

// ---------- exact-summation reference ----------
// Accumulates individual band terms in a fixed canonical order (for each new
// column e: its off-diagonal terms from the window start upward, then the
// diagonal) with compensated summation, so a streamed run and a from-scratch
// run over the same window perform the identical op sequence.

namespace {

struct ExactAcc {
  KahanSum sum_u, sum_u2, trace, frob2, rowvar;

  void start(const BandedMatrix& cov, const double* u, int64_t s) {
    *this = ExactAcc{};
    const double d0 = cov.diag(s);
    trace.add(d0);
    frob2.add(d0 * d0);
    rowvar.add(d0);
    if (u) {
      sum_u.add(u[s]);
      sum_u2.add(u[s] * u[s]);
    }
  }

  void extend(const BandedMatrix& cov, const double* u, int64_t s, int64_t e) {
    const int64_t bw = cov.bandwidth();
    for (int64_t i = std::max(s, e - bw); i < e; ++i) {
      const double v = cov.row(i)[e - i];
      frob2.add(2.0 * v * v);
      rowvar.add(2.0 * v);
    }
    const double dg = cov.diag(e);
    trace.add(dg);
    frob2.add(dg * dg);
    rowvar.add(dg);
    if (u) {
      sum_u.add(u[e]);
      sum_u2.add(u[e] * u[e]);
    }
  }

  WindowMoments moments() const {
    return WindowMoments{sum_u.s, sum_u2.s, trace.s, frob2.s, rowvar.s};
  }
};

}  // namespace

WindowMoments exact_window_moments(const BandedMatrix& cov, const double* u, int64_t s, int64_t e) {
  ExactAcc acc;
  acc.start(cov, u, s);
  for (int64_t k = s + 1; k <= e; ++k) acc.extend(cov, u, s, k);
  return acc.moments();
}

ScanResult scan_all_exact(const ScoreSet& scores, const ScanConfig& cfg) {
  cfg.validate(scores.size());
  ScanResult out;
  const StatEval eval{cfg.method};
  for (const auto& [b0, b1] : scores.chrom_blocks()) {
    if (b1 - b0 < cfg.l_min) continue;
    for (int64_t s = b0; s <= b1 - cfg.l_min; ++s) {
      ExactAcc acc;
      acc.start(scores.cov, scores.u.data(), s);
      const int64_t e_last = std::min(s + cfg.l_max, b1) - 1;
      for (int64_t e = s + 1; e <= e_last; ++e) {
        acc.extend(scores.cov, scores.u.data(), s, e);
        if (e - s + 1 < cfg.l_min) continue;
        const WindowMoments m = acc.moments();
        double stat;
        if (!eval(m, stat)) {
          ++out.n_skipped;
          continue;
        }
        out.windows.push_back(WindowStat{s, e, stat, m.trace, m.frob2});
        ++out.n_windows;
      }
    }
  }
  return out;
}

// ---------- Monte Carlo window tables ----------

namespace detail {

WindowTables build_window_tables(const ScoreSet& scores, int64_t l_min, int64_t l_max,
                                 bool with_mscan) {
  ScanConfig cfg{l_min, l_max, Method::qscan};
  cfg.validate(scores.size());

  WindowTables t;
  t.p = scores.size();
  t.l_min = l_min;
  t.l_max = l_max;
  t.blocks = scores.chrom_blocks();
  t.with_mscan = with_mscan;
  const int64_t nl = t.n_lengths();
  // Sentinels park invalid slots at stats around -1e50 (q) / below 0 (m) so
  // the branch-free max never picks them.
  t.q_trace.assign(static_cast<size_t>(t.p) * nl, 1e300);
  t.q_invden.assign(static_cast<size_t>(t.p) * nl, 1e-250);
  if (with_mscan) t.m_invvar.assign(static_cast<size_t>(t.p) * nl, -1e300);

  int64_t valid = 0;
  walk(scores.cov, static_cast<const double*>(nullptr), t.blocks, l_min, l_max, 0, t.p,
       [&](int64_t s, int64_t e, const WindowMoments& m) {
         const size_t slot = static_cast<size_t>(s) * nl + (e - s + 1 - l_min);
         if (m.frob2 > 0.0) {
           t.q_trace[slot] = m.trace;
           t.q_invden[slot] = 1.0 / std::sqrt(2.0 * m.frob2);
           ++valid;
         }
         if (with_mscan && m.rowvar > 0.0) t.m_invvar[slot] = 1.0 / m.rowvar;
       });
  if (valid == 0) {
    throw NoValidWindowError("no scannable window of length in [" + std::to_string(l_min) + ", " +
                             std::to_string(l_max) + "]");
  }
  return t;
}

void table_scan_max(const WindowTables& t, const double* u, double* qmax_out, double* mmax_out) {
  const int64_t nl = t.n_lengths();
  // prefix sums of u and u^2 so a window sum is two loads and a subtract
  static thread_local std::vector<double> p1, p2;
  p2.assign(t.p + 1, 0.0);
  for (int64_t i = 0; i < t.p; ++i) p2[i + 1] = p2[i] + u[i] * u[i];
  const bool want_m = mmax_out && t.with_mscan;
  if (want_m) {
    p1.assign(t.p + 1, 0.0);
    for (int64_t i = 0; i < t.p; ++i) p1[i + 1] = p1[i] + u[i];
  }

  double qmax = -std::numeric_limits<double>::infinity();
  double mmax = -std::numeric_limits<double>::infinity();
  for (const auto& [b0, b1] : t.blocks) {
    if (b1 - b0 < t.l_min) continue;
    for (int64_t s = b0; s <= b1 - t.l_min; ++s) {
      const int64_t n_here = std::min<int64_t>(nl, b1 - s - t.l_min + 1);
      const double* tr = t.q_trace.data() + static_cast<size_t>(s) * nl;
      const double* inv = t.q_invden.data() + static_cast<size_t>(s) * nl;
      const double* pe2 = p2.data() + s + t.l_min;
      const double base2 = p2[s];
      for (int64_t i = 0; i < n_here; ++i) {
        const double q = ((pe2[i] - base2) - tr[i]) * inv[i];
        qmax = q > qmax ? q : qmax;
      }
      if (want_m) {
        const double* iv = t.m_invvar.data() + static_cast<size_t>(s) * nl;
        const double* pe1 = p1.data() + s + t.l_min;
        const double base1 = p1[s];
        for (int64_t i = 0; i < n_here; ++i) {
          const double d = pe1[i] - base1;
          const double m = d * d * iv[i];
          mmax = m > mmax ? m : mmax;
        }
      }
    }
  }
  if (qmax_out) *qmax_out = qmax;
  if (mmax_out) *mmax_out = mmax;
}

}  // namespace detail

}  // namespace qscan
