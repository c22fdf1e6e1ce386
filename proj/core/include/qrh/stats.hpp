#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace qrh {

/// Pairwise (cascade) summation in index order. The result depends only on the
/// values and their order, never on how they were produced.
inline double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t kLeaf = 32;
  if (x.size() <= kLeaf) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Two-pass sample mean, unbiased variance, and standard error of the mean.
inline SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  m.count = x.size();
  if (x.empty()) return m;
  m.mean = pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() < 2) return m;
  double ss = 0.0;
  double comp = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    ss += d * d;
    comp += d;
  }
  const double n = static_cast<double>(x.size());
  m.variance = std::max(0.0, (ss - comp * comp / n) / (n - 1.0));
  m.std_error = std::sqrt(m.variance / n);
  return m;
}

}  // namespace qrh
