#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qscan/scan.hpp"

namespace qscan {

struct DetectedRegion {
  int64_t start = 0;  // retained-variant index, inclusive
  int64_t end = 0;    // inclusive
  int64_t start_bp = 0;
  int64_t end_bp = 0;
  int32_t chrom_id = 0;
  double stat = 0.0;
  int rank = 0;  // 1-based, decreasing stat

  int64_t length() const { return end - start + 1; }
};

struct ScanReport {
  double threshold = 0.0;
  Method method = Method::qscan;
  int64_t n_candidates = 0;
  int64_t n_windows = 0;
  int64_t n_skipped = 0;
  std::vector<DetectedRegion> regions;
};

// Greedy disjoint selection over the candidate windows (stat > threshold,
// strict): repeatedly take the highest-stat candidate (ties: smallest start,
// then shortest), drop every candidate sharing a variant with it, repeat.
// Implemented as one sweep over candidates sorted by that order, which
// selects exactly the same set.
std::vector<DetectedRegion> detect_regions(const std::vector<WindowStat>& candidates);

// Full pass: scan, filter by threshold, select, and fill bp coordinates.
ScanReport scan_and_detect(const ScoreSet& scores, const ScanConfig& cfg, double threshold,
                           int threads);

}  // namespace qscan
