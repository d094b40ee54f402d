#pragma once

#include <cstdint>
#include <vector>

namespace qscan {

// Closed integer interval of variant indices.
struct Interval {
  int64_t start = 0;
  int64_t end = 0;  // inclusive

  int64_t size() const { return end >= start ? end - start + 1 : 0; }
};

// |A intersect B| / |A union B| over the index sets the intervals cover.
// Disjoint intervals score 0; identical ones score 1.
double jaccard(const Interval& a, const Interval& b);

// Fraction of truth regions hit by (sharing at least one index with) at
// least one detected region.
double detection_rate(const std::vector<Interval>& truth, const std::vector<Interval>& detected);

// Mean over truth regions of the best Jaccard against any detected region;
// 0 when nothing was detected.
double jaccard_score(const std::vector<Interval>& truth, const std::vector<Interval>& detected);

}  // namespace qscan
