#include <cmath>
#include <vector>

#include "doctest.h"
#include "qrh/rng.hpp"
#include "qrh/stats.hpp"

using namespace qrh;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams are reproducible and prefix-stable") {
  const StreamId id{42, 0, 7, 3};
  std::vector<double> a(101), b(101), c(37);
  fill_normals(id, a);
  fill_normals(id, b);
  fill_normals(id, c);
  CHECK(a == b);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(a[i] == c[i]);

  std::vector<double> other(101);
  for (StreamId alt : {StreamId{43, 0, 7, 3}, StreamId{42, 1, 7, 3}, StreamId{42, 0, 8, 3}, StreamId{42, 0, 7, 4}}) {
    fill_normals(alt, other);
    CHECK(other != a);
  }
}

TEST_CASE("normal draws have the right moments") {
  std::vector<double> x(1 << 20);
  fill_normals(StreamId{2024, 0, 0, 0}, x);
  const SampleMoments m = sample_moments(x);
  const double n = static_cast<double>(x.size());
  CHECK(std::fabs(m.mean) < 5.0 / std::sqrt(n));
  CHECK(std::fabs(m.variance - 1.0) < 5.0 * std::sqrt(2.0 / n));
  double m3 = 0.0, m4 = 0.0, tail = 0.0;
  for (double v : x) {
    m3 += v * v * v;
    m4 += v * v * v * v;
    if (v > 2.0) tail += 1.0;
  }
  CHECK(std::fabs(m3 / n) < 5.0 * std::sqrt(15.0 / n));
  CHECK(std::fabs(m4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
  const double p = 0.022750131948179195;  // P(N > 2)
  CHECK(std::fabs(tail / n - p) < 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("pairwise sum and sample moments") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  CHECK(pairwise_sum(x) == 499500.0);
  const SampleMoments m = sample_moments(x);
  CHECK(m.mean == doctest::Approx(499.5));
  CHECK(m.variance == doctest::Approx(1000.0 * 1001.0 / 12.0));
  CHECK(m.std_error == doctest::Approx(std::sqrt(m.variance / 1000.0)));
}
