#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "sd/error.hpp"
#include "sd/rng.hpp"

using sd::Rng;
using sd::Stream;

TEST_CASE("splitmix64 reference value") {
  // First output of the reference splitmix64 generator seeded with 0.
  CHECK(sd::splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("same seed and stream reproduce the sequence") {
  Rng a(42, Stream::kFeatures), b(42, Stream::kFeatures);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("streams and seeds are distinct") {
  Rng a(1, Stream::kFeatures), b(1, Stream::kEvalFeatures), c(2, Stream::kFeatures);
  const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
  CHECK(x != y);
  CHECK(x != z);
  CHECK(y != z);
}

TEST_CASE("uniform stays in [0, 1) with the right moments") {
  Rng r(3, Stream::kTest);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(var - 1.0 / 12) < 2e-3);
}

TEST_CASE("normal moments") {
  Rng r(4, Stream::kTest);
  const int n = 200000;
  double sum = 0, sum2 = 0, sum4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    REQUIRE(std::isfinite(z));
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  CHECK(std::abs(sum / n) < 4 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  CHECK(std::abs(sum4 / n - 3.0) < 0.1);
}

TEST_CASE("index is unbiased and in range") {
  Rng r(5, Stream::kTest);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = r.index(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
  CHECK_THROWS_AS(r.index(0), sd::ParameterError);
}

TEST_CASE("split children are deterministic and independent of the parent position") {
  Rng parent(9, Stream::kSweep);
  Rng c1 = parent.split(0);
  parent.next_u64();
  Rng c2 = parent.split(0);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(parent.split(1).next_u64() != parent.split(0).next_u64());
}
