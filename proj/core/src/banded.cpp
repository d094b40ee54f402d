#include "qscan/banded.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qscan {

// Column-oriented banded Cholesky. The factor reuses the band layout with the
// triangle flipped: factor.row(k)[d] = L(k+d, k).
BandedMatrix banded_cholesky(const BandedMatrix& a) {
  const int64_t n = a.dim();
  const int64_t bw = a.bandwidth();
  BandedMatrix L(n, bw);

  for (int64_t k = 0; k < n; ++k) {
    double d = a.diag(k);
    const int64_t m_lo = std::max<int64_t>(0, k - bw);
    for (int64_t m = m_lo; m < k; ++m) {
      const double l = L.row(m)[k - m];
      d -= l * l;
    }
    if (!(d > 0.0)) {
      throw NotPositiveDefiniteError("banded Cholesky failed at column " + std::to_string(k) +
                                     " (pivot " + std::to_string(d) + ")");
    }
    const double lkk = std::sqrt(d);
    L.row(k)[0] = lkk;
    const int64_t i_hi = std::min(n - 1, k + bw);
    for (int64_t i = k + 1; i <= i_hi; ++i) {
      double s = a.at(k, i);
      const int64_t lo = std::max<int64_t>({0, i - bw, k - bw});
      for (int64_t m = lo; m < k; ++m) s -= L.row(m)[i - m] * L.row(m)[k - m];
      L.row(k)[i - k] = s / lkk;
    }
  }
  return L;
}

void banded_lower_multiply(const BandedMatrix& factor, const double* z, double* y) {
  const int64_t n = factor.dim();
  const int64_t bw = factor.bandwidth();
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    const int64_t k_lo = std::max<int64_t>(0, i - bw);
    for (int64_t k = k_lo; k <= i; ++k) s += factor.row(k)[i - k] * z[k];
    y[i] = s;
  }
}

}  // namespace qscan
