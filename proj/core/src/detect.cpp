#include "qscan/detect.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <utility>

namespace qscan {

std::vector<DetectedRegion> detect_regions(const std::vector<WindowStat>& candidates) {
  std::vector<const WindowStat*> order;
  order.reserve(candidates.size());
  for (const WindowStat& w : candidates) order.push_back(&w);
  std::sort(order.begin(), order.end(), [](const WindowStat* a, const WindowStat* b) {
    if (a->stat != b->stat) return a->stat > b->stat;
    if (a->start != b->start) return a->start < b->start;
    return a->end < b->end;
  });

  // A window survives the greedy argmax-and-remove loop exactly when nothing
  // ranked ahead of it and already selected overlaps it, so one sweep in rank
  // order suffices.
  std::vector<DetectedRegion> selected;
  std::vector<std::pair<int64_t, int64_t>> taken;  // kept sorted by start
  for (const WindowStat* w : order) {
    auto it = std::upper_bound(taken.begin(), taken.end(),
                               std::make_pair(w->end, std::numeric_limits<int64_t>::max()));
    const bool overlaps = it != taken.begin() && std::prev(it)->second >= w->start;
    if (overlaps) continue;
    taken.insert(it, {w->start, w->end});
    DetectedRegion r;
    r.start = w->start;
    r.end = w->end;
    r.stat = w->stat;
    selected.push_back(r);
  }
  for (size_t i = 0; i < selected.size(); ++i) selected[i].rank = static_cast<int>(i + 1);
  return selected;
}

ScanReport scan_and_detect(const ScoreSet& scores, const ScanConfig& cfg, double threshold,
                           int threads) {
  const ScanResult scan = scan_candidates(scores, cfg, threshold, threads);
  ScanReport report;
  report.threshold = threshold;
  report.method = cfg.method;
  report.n_candidates = static_cast<int64_t>(scan.windows.size());
  report.n_windows = scan.n_windows;
  report.n_skipped = scan.n_skipped;
  report.regions = detect_regions(scan.windows);
  for (DetectedRegion& r : report.regions) {
    r.chrom_id = scores.chrom_id[r.start];
    r.start_bp = scores.pos[r.start];
    r.end_bp = scores.pos[r.end];
  }
  return report;
}

}  // namespace qscan
