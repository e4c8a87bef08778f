#include <doctest.h>

#include <cmath>
#include <vector>

#include "rbsgd/random.hpp"

using rbsgd::Philox;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using B = Philox::Block;
  using K = Philox::Key;
  CHECK(Philox::Encrypt(B{0, 0, 0, 0}, K{0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox::Encrypt(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox::Encrypt(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same key and stream give the same sequence") {
  Philox a(42, 7);
  Philox b(42, 7);
  for (int t = 0; t < 1000; ++t) REQUIRE(a.NextU64() == b.NextU64());
}

TEST_CASE("streams and keys are distinct") {
  Philox a(42, 7);
  Philox b(42, 8);
  Philox c(43, 7);
  int same_ab = 0;
  int same_ac = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto x = a.NextU64();
    same_ab += x == b.NextU64();
    same_ac += x == c.NextU64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("split shares the key and switches stream") {
  Philox base(9, 1);
  Philox split = base.Split(5);
  Philox direct(9, 5);
  for (int t = 0; t < 100; ++t) CHECK(split.NextU64() == direct.NextU64());
}

TEST_CASE("Below stays in range and hits every value") {
  Philox rng(1, 2);
  std::vector<int> seen(7, 0);
  for (int t = 0; t < 10'000; ++t) {
    const auto v = rng.Below(7);
    REQUIRE(v < 7);
    ++seen[v];
  }
  for (int count : seen) CHECK(count > 0);
  CHECK(rng.Below(1) == 0);
}

TEST_CASE("Below marginals over 1e6 draws lie within 5 sigma of uniform") {
  for (std::uint64_t bound : {2ULL, 10ULL, 37ULL, 10'000ULL}) {
    Philox rng(123, bound);
    std::vector<double> counts(bound, 0.0);
    const double draws = 1e6;
    for (int t = 0; t < 1'000'000; ++t) counts[rng.Below(bound)] += 1.0;
    const double p = 1.0 / static_cast<double>(bound);
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    for (double c : counts) REQUIRE(std::abs(c - draws * p) <= 5.0 * sigma);
  }
}

TEST_CASE("Uniform01 lies in [0, 1) with mean near 1/2") {
  Philox rng(5, 5);
  double sum = 0.0;
  for (int t = 0; t < 100'000; ++t) {
    const double u = rng.Uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 1e5 - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST_CASE("Normal has unit variance") {
  Philox rng(11, 3);
  double s1 = 0.0;
  double s2 = 0.0;
  const int draws = 200'000;
  for (int t = 0; t < draws; ++t) {
    const double z = rng.Normal();
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / draws;
  const double var = s2 / draws - mean * mean;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(draws));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / draws));
}

TEST_CASE("blocks are consumed two words at a time") {
  Philox rng(0, 0);
  CHECK(rng.blocks_consumed() == 0);
  rng.NextU64();
  CHECK(rng.blocks_consumed() == 1);
  rng.NextU64();
  CHECK(rng.blocks_consumed() == 1);
  rng.NextU64();
  CHECK(rng.blocks_consumed() == 2);
}
