#include "qscan/evaluate.hpp"

#include <algorithm>

namespace qscan {

double jaccard(const Interval& a, const Interval& b) {
  if (a.size() <= 0 || b.size() <= 0) return 0.0;
  const int64_t inter_lo = std::max(a.start, b.start);
  const int64_t inter_hi = std::min(a.end, b.end);
  const int64_t inter = inter_hi >= inter_lo ? inter_hi - inter_lo + 1 : 0;
  const int64_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double detection_rate(const std::vector<Interval>& truth, const std::vector<Interval>& detected) {
  if (truth.empty()) return 0.0;
  int64_t hit = 0;
  for (const Interval& t : truth) {
    for (const Interval& d : detected) {
      if (std::max(t.start, d.start) <= std::min(t.end, d.end)) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double jaccard_score(const std::vector<Interval>& truth, const std::vector<Interval>& detected) {
  if (truth.empty()) return 0.0;
  double total = 0.0;
  for (const Interval& t : truth) {
    double best = 0.0;
    for (const Interval& d : detected) best = std::max(best, jaccard(t, d));
    total += best;
  }
  return total / static_cast<double>(truth.size());
}

}  // namespace qscan
