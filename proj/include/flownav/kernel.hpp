#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "flownav/error.hpp"

namespace flownav {

struct KernelParams {
  double gamma = 1.0;
};

inline double squared_distance(std::span<const double> x, std::span<const double> z) {
  if (x.size() != z.size()) throw Error(ErrorKind::LengthMismatch, "vectors differ in length");
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - z[d];
    acc += diff * diff;
  }
  return acc;
}

// exp(-gamma * |x - z|^2)
inline double rbf(std::span<const double> x, std::span<const double> z, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::NonPositiveHyperparameter, "gamma must be > 0");
  return std::exp(-gamma * squared_distance(x, z));
}

// Lazily filled row cache over an n x n symmetric matrix. Rows are computed on
// first use and kept for the lifetime of the cache (one training run).
template <typename EntryFn>
class RowCache {
 public:
  RowCache(std::size_t n, EntryFn entry) : n_(n), entry_(std::move(entry)), rows_(n), diag_(n) {
    for (std::size_t i = 0; i < n; ++i) diag_[i] = entry_(i, i);
  }

  std::size_t size() const noexcept { return n_; }
  double diag(std::size_t i) const noexcept { return diag_[i]; }

  std::span<const double> row(std::size_t i) {
    auto& r = rows_[i];
    if (r.empty()) {
      r.resize(n_);
      for (std::size_t t = 0; t < n_; ++t) r[t] = entry_(i, t);
    }
    return r;
  }

 private:
  std::size_t n_;
  EntryFn entry_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> diag_;
};

}  // namespace flownav
