#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle/brute_force.hpp"
#include "support.hpp"
#include "tbinfo/errors.hpp"
#include "tbinfo/frames.hpp"

using namespace tbinfo;
using testing::close_rel;

TEST_CASE("omega examples") {
  CHECK(omega(4, 2, 2, 2) == doctest::Approx(6));
  CHECK(omega(4, 2, 2, 1) == doctest::Approx(24));
  CHECK(to_double(omega_exact(4, 2, 2, 1)) == 24);
  CHECK_THROWS_AS(omega(4, 2, 2, 3), DomainError);
  CHECK_THROWS_AS(omega(4, 3, 3, 1), DomainError);  // needs L >= 2
}

TEST_CASE("omega equals a brute-force pair count") {
  for (int N : {6, 10}) {
    for (int x = 0; x <= 4; ++x)
      for (int y = 0; y <= 4; ++y) {
        const auto [lo, hi] = overlap_range(N, x, y);
        std::vector<long> count(static_cast<std::size_t>(std::min(x, y) + 1), 0);
        for (unsigned r = 0; r < (1u << N); ++r) {
          if (std::popcount(r) != x) continue;
          for (unsigned s = 0; s < (1u << N); ++s)
            if (std::popcount(s) == y) count[std::popcount(r & s)]++;
        }
        for (int L = lo; L <= hi; ++L) {
          CHECK(to_double(omega_exact(N, x, y, L)) == count[L]);
          CHECK(close_rel(omega(N, x, y, L), count[L], 1e-12));
        }
      }
  }
}

TEST_CASE("p_k examples") {
  CHECK(p_k(5, 0, 0.9, 0.1) == doctest::Approx(std::pow(0.9, 5)));
  CHECK(p_k(2, 1, 0.5, 0.5) == doctest::Approx(0.5));
  CHECK(p_kk(7, 0, 0, BinProbabilities::from_joint(0.7, 0.1, 0.1, 0.1)) == doctest::Approx(std::pow(0.7, 7)));
}

TEST_CASE("p_kk marginalises to p_k") {
  std::mt19937_64 rng(5);
  for (int N = 1; N <= 12; ++N) {
    const auto b = oracle::random_bins(rng);
    for (int x = 0; x <= N; ++x) {
      double s = 0;
      for (int y = 0; y <= N; ++y) s += p_kk(N, x, y, b);
      CHECK(close_rel(s, p_k(N, x, b.pA0, b.pAc), 1e-12));
    }
  }
}

TEST_CASE("class probabilities and conditional MI match enumeration") {
  std::mt19937_64 rng(17);
  for (int N : {4, 6}) {
    for (int draw = 0; draw < 5; ++draw) {
      const auto b = oracle::random_bins(rng);
      const auto e = oracle::enumerate(N, b);
      for (int x = 0; x <= N; ++x)
        for (int y = 0; y <= N; ++y) {
          CHECK(close_rel(p_kk(N, x, y, b), e.at(e.p, x, y), 1e-10));
          CHECK(close_rel(cond_mi(N, x, y, b), e.at(e.h, x, y), 1e-9, 1.0));
        }
    }
  }
}

TEST_CASE("symmetric bins, N=4, (1,1)") {
  const auto b = BinProbabilities::from_joint(0.6, 0.1, 0.1, 0.2);
  const auto e = oracle::enumerate(4, b);
  CHECK(close_rel(cond_mi(4, 1, 1, b), e.at(e.h, 1, 1), 1e-12));
}

TEST_CASE("anti-correlated bins") {
  // every bin has exactly one click: (1,1) frames only exist for N = 2
  const auto b = BinProbabilities::from_joint(0.0, 0.5, 0.5, 0.0);
  CHECK(cond_mi(2, 1, 1, b) == doctest::Approx(1.0));
  const auto e2 = oracle::enumerate(2, b);
  CHECK(close_rel(cond_mi(2, 1, 1, b), e2.at(e2.h, 1, 1), 1e-12));
  CHECK_THROWS_AS(cond_mi(5, 1, 1, b), DomainError);
  // never in the same bin: Bob's click is uniform over the other N-1 bins
  const auto c = BinProbabilities::from_joint(0.5, 0.25, 0.25, 0.0);
  const int N = 5;
  CHECK(cond_mi(N, 1, 1, c) == doctest::Approx(2 * std::log2(N) - std::log2(N * (N - 1.0))));
  const auto e = oracle::enumerate(N, c);
  CHECK(close_rel(cond_mi(N, 1, 1, c), e.at(e.h, 1, 1), 1e-12));
}

TEST_CASE("conditional MI upper bound and symmetry") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 50; ++k) {
    const auto b = oracle::random_bins(rng);
    const auto sw = BinProbabilities::from_joint(b.p00, b.pc0, b.p0c, b.pcc);
    for (int x = 0; x <= 4; ++x)
      for (int y = 0; y <= 4; ++y) {
        const double h = cond_mi(9, x, y, b);
        CHECK(h <= lossless_mi(9, x) + lossless_mi(9, y) + 1e-12);
        CHECK(close_rel(h, cond_mi(9, y, x, sw), 1e-12, 1.0));
      }
  }
  // equality when only one overlap survives: x = 0
  const auto b = BinProbabilities::from_joint(0.4, 0.3, 0.2, 0.1);
  CHECK(cond_mi(9, 0, 3, b) == doctest::Approx(lossless_mi(9, 0) + lossless_mi(9, 3) - lossless_mi(9, 3)));
}

TEST_CASE("lossless MI") {
  CHECK(lossless_mi(4, 1) == doctest::Approx(2));
  CHECK(lossless_mi(4, 2) == doctest::Approx(std::log2(6.0)));
  CHECK(lossless_mi(1024, 1) == doctest::Approx(10));
}

TEST_CASE("closed forms equal the conditional MI route") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    const double lam = std::pow(10.0, -6 + 4 * u(rng));
    const ChannelConfig ch{0.05 + 0.9 * u(rng), 0.05 + 0.9 * u(rng), 1e-6 * u(rng), 1e-6 * u(rng)};
    const auto b = poissonian_bin_probs(lam, ch);
    const auto r = pair_rates(lam, ch);
    const int N = 4 + static_cast<int>(u(rng) * 20000);
    const double route11 = p_kk(N, 1, 1, b) * cond_mi(N, 1, 1, b) / (N * r.detected);
    const double route22 = p_kk(N, 2, 2, b) * cond_mi(N, 2, 2, b) / (N * r.detected);
    CHECK(close_rel(bits_per_pair_11(N, b, r).detected, route11, 1e-9));
    CHECK(close_rel(bits_per_pair_22(N, b, r).detected, route22, 1e-9));
    CHECK(close_rel(bits_per_pair(N, {2, 2}, b, r).detected, route22, 1e-12));
    CHECK(close_rel(bits_per_pair_11(N, b, r).generated * lam, route11 * r.detected, 1e-9));
  }
}

TEST_CASE("per-pair closed forms match enumeration") {
  std::mt19937_64 rng(31);
  const PairRates unit{1.0, 1.0};
  for (int N : {6, 8}) {
    const auto b = oracle::random_bins(rng);
    const auto e = oracle::enumerate(N, b);
    CHECK(close_rel(bits_per_pair_11(N, b, unit).detected * N, e.at(e.p, 1, 1) * e.at(e.h, 1, 1), 1e-10));
    CHECK(close_rel(bits_per_pair_22(N, b, unit).detected * N, e.at(e.p, 2, 2) * e.at(e.h, 2, 2), 1e-10));
  }
}

TEST_CASE("spot value for (1,1) frames") {
  const auto ch = ChannelConfig::symmetric(0.3, 6.53e-8);
  const double lam = 5.33e-5;
  const auto v = bits_per_pair_11(3579, poissonian_bin_probs(lam, ch), pair_rates(lam, ch));
  CHECK(std::abs(v.detected - 10.3) <= 0.05);
  CHECK(v.generated < v.detected);
}

TEST_CASE("no pairs is a domain error") {
  const ChannelConfig ch = ChannelConfig::symmetric(0.5, 0.0);
  const auto b = poissonian_bin_probs(0.0, ch);
  CHECK_THROWS_AS(bits_per_pair_11(100, b, pair_rates(0.0, ch)), DomainError);
  CHECK_THROWS_AS(bits_per_pair_11(1, b, pair_rates(1e-3, ch)), DomainError);
  CHECK_THROWS_AS(bits_per_pair_22(3, b, pair_rates(1e-3, ch)), DomainError);
  const auto dark_only = pair_rates(0.0, ChannelConfig::symmetric(0.5, 1e-3));
  CHECK(std::isnan(bits_per_pair_11(100, poissonian_bin_probs(0.0, ChannelConfig::symmetric(0.5, 1e-3)), dark_only).generated));
}

TEST_CASE("(2,2) frames carry a visible share at N=1000") {
  const auto ch = ChannelConfig::symmetric(0.7, 6.53e-8);
  const double lam = 5.33e-5;
  const auto b = poissonian_bin_probs(lam, ch);
  const auto r = pair_rates(lam, ch);
  const double b11 = bits_per_pair_11(1000, b, r).detected;
  const double b22 = bits_per_pair_22(1000, b, r).detected;
  CHECK(b22 / (b11 + b22) > 0.005);
}

TEST_CASE("h_kk") {
  const auto dead = BinProbabilities::from_joint(1, 0, 0, 0);
  CHECK(h_kk(50, dead).joint == 0.0);
  std::mt19937_64 rng(37);
  for (int k = 0; k < 5; ++k) {
    const auto b = oracle::random_bins(rng);
    const auto e = oracle::enumerate(8, b);
    double joint = 0;
    for (double p : e.p)
      if (p > 0) joint -= p * std::log2(p);
    const auto h = h_kk(8, b);
    CHECK(close_rel(h.joint, joint, 1e-10));
    CHECK(h.truncation <= 1e-12);
  }
  CHECK_THROWS_AS(h_kk(8, dead, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(h_kk(8, dead, 1e-3), std::invalid_argument);
}

TEST_CASE("information split: N H_bin = sum P H + I(K_A;K_B)") {
  std::mt19937_64 rng(41);
  for (int N = 1; N <= 10; ++N) {
    for (int k = 0; k < 10; ++k) {
      const auto b = oracle::random_bins(rng);
      const auto h = h_kk(N, b);
      const double frame = N * bin_mutual_info(b);
      CHECK(std::abs(frame - (h.cond_mi_sum + h.mutual)) < 1e-8);
      // with the joint click-count entropy in place of I the sum overshoots by H(K_A|K_B) + H(K_B|K_A)
      CHECK(h.cond_mi_sum + h.joint >= frame - 1e-8);
    }
  }
}

TEST_CASE("large frames stay finite") {
  const auto ch = ChannelConfig::symmetric(0.7, 6.53e-8);
  const double lam = 1e-5;
  const auto b = poissonian_bin_probs(lam, ch);
  const auto r = pair_rates(lam, ch);
  for (int N : {10000, 50000, 100000}) {
    CHECK(std::isfinite(bits_per_pair_11(N, b, r).detected));
    CHECK(std::isfinite(bits_per_pair_22(N, b, r).detected));
    CHECK(std::isfinite(cond_mi(N, 3, 2, b)));
    CHECK(p_kk(N, 2, 2, b) > 0.0);
  }
  const auto h = h_kk(100000, b);
  CHECK(std::isfinite(h.joint));
  CHECK(h.truncation <= 1e-12);
}

TEST_CASE("frame_info routes the lossless case") {
  const ChannelConfig ideal{1, 1, 0, 0};
  const FrameClass classes[] = {{1, 1}, {2, 2}, {1, 2}};
  const auto rep = frame_info(64, classes, SourceModel::poissonian(1e-3), ideal);
  CHECK(rep.class_cond_mi[0] == doctest::Approx(6.0));
  CHECK(rep.class_cond_mi[1] == doctest::Approx(std::log2(2016.0)));
  CHECK(rep.class_p[2] == 0.0);
  const ChannelConfig lossy = ChannelConfig::symmetric(0.7, 6.53e-8);
  const FrameClass one[] = {{1, 1}};
  const auto r2 = frame_info(3000, one, SourceModel::poissonian(5.33e-5), lossy);
  const auto b = poissonian_bin_probs(5.33e-5, lossy);
  CHECK(close_rel(r2.bits_per_detected_pair, bits_per_pair_11(3000, b, pair_rates(5.33e-5, lossy)).detected, 1e-9));
  CHECK(r2.h_kk >= 0.0);
  CHECK(r2.p_class >= 0.0);
  CHECK(r2.p_class <= 1.0);
}
