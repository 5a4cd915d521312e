#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle/brute_force.hpp"
#include "support.hpp"
#include "tbinfo/deadtime.hpp"
#include "tbinfo/errors.hpp"

using namespace tbinfo;
using testing::close_rel;

TEST_CASE("delta examples") {
  CHECK(delta("1010", 1));
  CHECK_FALSE(delta("1100", 1));
  CHECK(delta("100100", 2));
  CHECK_FALSE(delta("100100", 3));
  CHECK(delta("0000", 5));
  CHECK(delta("1", 7));
  CHECK(delta(0b0101u, 4, 1));
  CHECK_FALSE(delta(0b0011u, 4, 1));
  CHECK_THROWS_AS(delta("10x1", 1), std::invalid_argument);
}

TEST_CASE("allowed two-click counts") {
  CHECK(to_double(allowed_two_click_count(4, 1)) == 3);
  for (int N = 2; N < 30; ++N) CHECK(to_double(allowed_two_click_count(N, 0)) == N * (N - 1) / 2);
  CHECK(allowed_two_click_count(5, 4) == 0);
  CHECK(allowed_two_click_count(3, 2) == 0);
  for (int md = 0; md <= 5; ++md) {
    long brute = 0;
    for (unsigned r = 0; r < (1u << 10); ++r)
      if (std::popcount(r) == 2 && delta(r, 10, md)) ++brute;
    CHECK(to_double(allowed_two_click_count(10, md)) == brute);
  }
}

TEST_CASE("overlap counts: DP against brute force") {
  for (int N = 1; N <= 12; ++N)
    for (int md = 0; md <= 3; ++md)
      for (int x = 0; x <= std::min(N, 3); ++x)
        for (int y = 0; y <= std::min(N, 3); ++y) {
          const auto c = overlap_counts(N, x, y, md);
          std::vector<long> brute(4, 0);
          long va = 0, vb = 0;
          for (unsigned r = 0; r < (1u << N); ++r) {
            if (!delta(r, N, md)) continue;
            if (std::popcount(r) == x) ++va;
            if (std::popcount(r) == y) ++vb;
            if (std::popcount(r) != x) continue;
            for (unsigned s = 0; s < (1u << N); ++s)
              if (std::popcount(s) == y && delta(s, N, md)) brute[std::popcount(r & s)]++;
          }
          CHECK(to_double(c.alice) == va);
          CHECK(to_double(c.bob) == vb);
          for (std::size_t i = 0; i < c.by_overlap.size(); ++i) CHECK(to_double(c.by_overlap[i]) == brute[c.lo + i]);
        }
}

TEST_CASE("closed-form (2,2) counts agree with the DP") {
  for (int N = 2; N <= 24; ++N)
    for (int md = 0; md <= 6; ++md) {
      const auto a = overlap_counts_22(N, md);
      const auto b = overlap_counts(N, 2, 2, md);
      CHECK(a.lo == b.lo);
      REQUIRE(a.by_overlap.size() == b.by_overlap.size());
      for (std::size_t i = 0; i < a.by_overlap.size(); ++i) CHECK(a.by_overlap[i] == b.by_overlap[i]);
      CHECK(a.alice == b.alice);
    }
  const auto big = overlap_counts_22(100000, 230);
  const u128 v = allowed_two_click_count(100000, 230);
  CHECK(big.by_overlap[0] + big.by_overlap[1] + big.by_overlap[2] == v * v);
}

TEST_CASE("filtered pattern probabilities") {
  const auto b = BinProbabilities::from_joint(0.6, 0.1, 0.1, 0.2);
  CHECK(deadtime_pattern_probs(0b0011, 0b0101, 4, b, 1).joint == 0.0);
  CHECK(deadtime_pattern_probs(0b0011, 0b0101, 4, b, 1).alice == 0.0);
  const auto p = deadtime_pattern_probs(0b0101, 0b0101, 4, b, 1);
  CHECK(p.joint == doctest::Approx(b.pcc * b.pcc));
  CHECK(p.alice == doctest::Approx(b.pAc * b.pAc));
  CHECK_THROWS_AS(deadtime_pattern_probs(1, 1, 4, BinProbabilities::from_joint(0, 0.5, 0.5, 0), 1), DomainError);
}

TEST_CASE("class totals and conditional MI against enumeration") {
  std::mt19937_64 rng(43);
  for (int N : {6, 9, 12}) {
    for (int md = 1; md <= 3; ++md) {
      const auto b = oracle::random_bins(rng, 0.05);
      const auto e = oracle::enumerate(N, b, md);
      for (int x = 0; x <= 3; ++x)
        for (int y = 0; y <= 3; ++y) {
          const double p = deadtime_class_prob(N, x, y, b, md);
          CHECK(close_rel(p, e.at(e.p, x, y), 1e-10));
          if (p > 0) CHECK(close_rel(cond_mi_deadtime(N, x, y, b, md), e.at(e.h, x, y), 1e-9, 1.0));
        }
    }
  }
}

TEST_CASE("filtered class is a distribution after renormalisation") {
  std::mt19937_64 rng(47);
  for (int N = 4; N <= 12; ++N) {
    const auto b = oracle::random_bins(rng);
    const int md = N % 3 + 1;
    const double total = deadtime_class_prob(N, 2, 2, b, md);
    if (total == 0.0) continue;
    double s = 0;
    for (unsigned r = 0; r < (1u << N); ++r)
      for (unsigned t = 0; t < (1u << N); ++t)
        if (std::popcount(r) == 2 && std::popcount(t) == 2) s += deadtime_pattern_probs(r, t, N, b, md).joint;
    CHECK(std::abs(s / total - 1.0) < 1e-9);
  }
}

TEST_CASE("md = 0 reduces to the unfiltered results") {
  std::mt19937_64 rng(53);
  for (int k = 0; k < 20; ++k) {
    const auto b = oracle::random_bins(rng);
    const int N = 4 + k * 37;
    CHECK(close_rel(cond_mi_deadtime_22(N, b, 0), cond_mi(N, 2, 2, b), 1e-12));
    const PairRates r{1.0, 1.0};
    CHECK(close_rel(bits_per_pair_deadtime_22(N, b, r, 0).detected, bits_per_pair_22(N, b, r).detected, 1e-9));
    if (N <= 40) CHECK(close_rel(cond_mi_deadtime(N, 3, 2, b, 0), cond_mi(N, 3, 2, b), 1e-12));
  }
}

TEST_CASE("entropy bound on the filtered alphabet") {
  std::mt19937_64 rng(59);
  for (int k = 0; k < 50; ++k) {
    const auto b = oracle::random_bins(rng);
    const int N = 6 + k;
    const int md = k % 5;
    if (allowed_two_click_count(N, md) == 0) continue;
    CHECK(cond_mi_deadtime_22(N, b, md) <= 2 * std::log2(to_double(allowed_two_click_count(N, md))) + 1e-12);
  }
}

TEST_CASE("removing patterns lowers the unscaled class mass") {
  std::mt19937_64 rng(61);
  for (int k = 0; k < 100; ++k) {
    const auto b = oracle::random_bins(rng);
    for (int N = 5; N <= 14; ++N) {
      double prev = 2.0;
      for (int md = 0; allowed_two_click_count(N, md) > 0; ++md) {
        const double mass = deadtime_class_prob(N, 2, 2, b, md) * std::pow(b.p00, 2 * md);
        CHECK(mass <= prev * (1 + 1e-12));
        prev = mass;
      }
    }
  }
}

TEST_CASE("conditional MI is not monotone in the dead-time") {
  // Filtering changes the alphabet as well as the overlap weights, so a
  // longer dead-time can raise the per-class information.
  std::mt19937_64 rng(67);
  int rises = 0;
  for (int k = 0; k < 200; ++k) {
    const auto b = oracle::random_bins(rng);
    for (int N = 5; N <= 14; ++N) {
      double prev = -1;
      for (int md = 0; allowed_two_click_count(N, md) > 0; ++md) {
        const double h = cond_mi_deadtime_22(N, b, md);
        if (prev >= 0 && h > prev + 1e-12) ++rises;
        prev = h;
      }
    }
  }
  CHECK(rises > 0);
}

TEST_CASE("infeasible frames") {
  const auto b = BinProbabilities::from_joint(0.9, 0.03, 0.03, 0.04);
  CHECK_THROWS_AS(cond_mi_deadtime_22(5, b, 4), DomainError);
  CHECK_NOTHROW(cond_mi_deadtime_22(6, b, 4));
  CHECK_THROWS_AS(bits_per_pair_deadtime_11(230, b, {1, 1}, 230), DomainError);
  CHECK_NOTHROW(bits_per_pair_deadtime_11(231, b, {1, 1}, 230));
  CHECK_THROWS_AS(delta("101", -1), DomainError);
}

TEST_CASE("(2,2) frames keep useful information under the detector dead-times") {
  const double lam = 5.33e-5;
  for (auto [eta, q, md] : {std::tuple{0.7, 6.53e-8, 230}, std::tuple{0.9, 1.3e-10, 154}}) {
    const auto ch = ChannelConfig::symmetric(eta, q);
    const auto b = poissonian_bin_probs(lam, ch);
    const auto r = pair_rates(lam, ch);
    for (long N : {1000L, 3000L, 10000L, 30000L}) {
      const double v = bits_per_pair_deadtime_22(N, b, r, md).detected;
      CHECK(v > 0.0);
      CHECK(std::isfinite(v));
    }
  }
}
