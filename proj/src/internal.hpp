#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include "promises/aligner.hpp"

namespace promises::detail {

/// Runs fn(i) for i in [0, count) over `workers` threads. Each index is
/// handled by exactly one thread, so results stored per index do not depend
/// on the worker count.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  }
}

/// Inverses of a covariance pair. Identity pairs skip all products.
struct Precision {
  bool identity = true;
  Matrix n_inv;
  Matrix m_inv;

  static Precision from(const CovariancePair& cov);

  Matrix left(const Matrix& a) const { return identity ? a : Matrix(n_inv * a); }
  Matrix right(const Matrix& a) const { return identity ? a : Matrix(a * m_inv); }
};

/// Pseudo-inverse of a symmetric PSD matrix. Null directions other than the
/// constant vector (when `allow_constant_null` is set) raise NumericError
/// naming `what`.
Matrix symmetric_inverse(const Matrix& s, const char* what,
                         bool allow_constant_null);

} // namespace promises::detail
