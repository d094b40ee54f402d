#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qscan/errors.hpp"

namespace qscan {

// Symmetric banded matrix, upper-triangle storage: entry(j, j+d) for
// d = 0..bandwidth lives at storage[j*(bandwidth+1)+d]. Entries beyond the
// band are zero by contract; slots whose column j+d >= dim (or crosses a
// chromosome boundary, which callers simply never write) stay zero.
class BandedMatrix {
public:
  BandedMatrix() = default;
  BandedMatrix(int64_t dim, int64_t bandwidth)
      : dim_(dim), bw_(bandwidth), storage_(static_cast<size_t>(dim) * (bandwidth + 1), 0.0) {}

  int64_t dim() const { return dim_; }
  int64_t bandwidth() const { return bw_; }

  double at(int64_t j, int64_t k) const {
    if (j > k) std::swap(j, k);
    const int64_t d = k - j;
    if (d > bw_) return 0.0;
    return storage_[static_cast<size_t>(j) * (bw_ + 1) + d];
  }

  void set(int64_t j, int64_t k, double v) {
    if (j > k) std::swap(j, k);
    const int64_t d = k - j;
    if (d > bw_) throw DimensionError("banded matrix write outside the band");
    storage_[static_cast<size_t>(j) * (bw_ + 1) + d] = v;
  }

  double diag(int64_t j) const { return storage_[static_cast<size_t>(j) * (bw_ + 1)]; }

  const double* row(int64_t j) const { return storage_.data() + static_cast<size_t>(j) * (bw_ + 1); }
  double* row(int64_t j) { return storage_.data() + static_cast<size_t>(j) * (bw_ + 1); }

  const std::vector<double>& storage() const { return storage_; }
  std::vector<double>& storage() { return storage_; }

private:
  int64_t dim_ = 0;
  int64_t bw_ = 0;
  std::vector<double> storage_;
};

// Banded Cholesky: returns lower-banded L with A = L L' using the same row
// layout transposed (factor.row(j)[d] = L(j+d, j) stored by column). Zero
// off-diagonal runs between chromosome blocks keep the factor block diagonal.
// Throws NotPositiveDefiniteError naming the failing column.
BandedMatrix banded_cholesky(const BandedMatrix& a);

// y = L * z for a factor from banded_cholesky (z length dim).
void banded_lower_multiply(const BandedMatrix& factor, const double* z, double* y);

}  // namespace qscan
