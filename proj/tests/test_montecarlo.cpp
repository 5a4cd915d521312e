#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracle/brute_force.hpp"
#include "support.hpp"
#include "tbinfo/errors.hpp"
#include "tbinfo/frames.hpp"
#include "tbinfo/montecarlo.hpp"

using namespace tbinfo;

namespace {

SimConfig inflated(int N, std::uint64_t frames, std::uint64_t seed = 2024) {
  SimConfig c;
  c.source = SourceModel::poissonian(1e-2);
  c.channel = ChannelConfig::symmetric(0.5, 1e-3);
  c.frame_size = N;
  c.n_frames = frames;
  c.seed = seed;
  c.chunk_frames = 50000;
  return c;
}

double z(double count, double n, double p) { return (count - n * p) / std::sqrt(n * p * (1 - p)); }

}  // namespace

TEST_CASE("empty source and no dark counts") {
  SimConfig c = inflated(8, 10000);
  c.source = SourceModel::poissonian(0.0);
  c.channel = ChannelConfig::symmetric(0.5, 0.0);
  const auto r = simulate(c);
  CHECK(r.count(0, 0) == 10000);
  CHECK(r.bin_joint[0] == 80000);
}

TEST_CASE("lossless channel gives identical patterns") {
  SimConfig c = inflated(8, 200000);
  c.source = SourceModel::poissonian(0.05);
  c.channel = ChannelConfig{1, 1, 0, 0};
  const auto r = simulate(c);
  for (const auto& [cls, n] : r.class_counts) CHECK(cls.first == cls.second);
  for (const auto& [cls, pairs] : r.pattern_pairs)
    for (const auto& [pp, n] : pairs) CHECK(pp.first == pp.second);
  // X = Y, so the plug-in MI is the empirical entropy of the click position
  const auto est = estimate_cond_mi(r, 1, 1);
  CHECK(est.plugin == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(est.plugin <= 3.0);
}

TEST_CASE("seed determinism and thread independence") {
  SimConfig c = inflated(8, 300000, 99);
  c.jitter = JitterProfile::two_point(0.8);
  c.deadtime.md = 2;
  c.threads = 1;
  const auto a = simulate(c);
  c.threads = 4;
  const auto b = simulate(c);
  CHECK(a.class_counts == b.class_counts);
  CHECK(a.bin_joint == b.bin_joint);
  CHECK(a.cells11 == b.cells11);
  CHECK(a.pattern_pairs == b.pattern_pairs);
  c.seed = 100;
  CHECK(simulate(c).bin_joint != a.bin_joint);
}

TEST_CASE("counts add up") {
  const auto r = simulate(inflated(12, 123457));
  std::uint64_t s = 0;
  for (const auto& [k, v] : r.class_counts) s += v;
  CHECK(s == 123457);
  CHECK(r.bin_joint[0] + r.bin_joint[1] + r.bin_joint[2] + r.bin_joint[3] == 12u * 123457u);
  CHECK(r.n_frames == 123457);
}

TEST_CASE("bin and class frequencies match the closed forms") {
  const int N = 8;
  const auto c = inflated(N, 2000000);
  const auto r = simulate(c);
  const auto b = poissonian_bin_probs(1e-2, c.channel);
  const double nb = static_cast<double>(N) * c.n_frames;
  const double p[4] = {b.p00, b.p0c, b.pc0, b.pcc};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(z(r.bin_joint[i], nb, p[i])) < 4);
  for (int x = 0; x <= 2; ++x)
    for (int y = 0; y <= 2; ++y) CHECK(std::abs(z(r.count(x, y), c.n_frames, p_kk(N, x, y, b))) < 4);
  const auto est = estimate_cond_mi(r, 1, 1);
  const double want = cond_mi(N, 1, 1, b);
  CHECK(std::abs(est.bits - want) < 4 * est.stderr_bits);
}

TEST_CASE("dead-time spacing holds on the stream") {
  SimConfig c = inflated(10, 20000);
  c.source = SourceModel::poissonian(0.3);
  c.channel = ChannelConfig::symmetric(0.8, 0.05);
  c.deadtime.md = 3;
  c.chunk_frames = 5000;
  for (std::uint64_t k = 0; k < chunk_count(c); ++k) {
    const auto s = simulate_chunk(c, k);
    for (const auto* side : {&s.a, &s.b}) {
      long last = -100;
      for (std::size_t t = 0; t < side->size(); ++t) {
        if (!(*side)[t]) continue;
        CHECK(static_cast<long>(t) - last > 3);
        last = static_cast<long>(t);
      }
    }
  }
}

TEST_CASE("jittered (1,1) cells match the jump-process enumeration") {
  const int N = 8;
  SimConfig c = inflated(N, 3000000, 7);
  c.jitter = JitterProfile::two_point(0.8);
  const auto r = simulate(c);
  const oracle::PhysicalJitter ph(c.source, c.channel, c.jitter);
  const auto cells = ph.cells11(N);
  int bad = 0;
  for (int i = 0; i < N * N; ++i) {
    const double zz = z(static_cast<double>(r.cells11[i]), c.n_frames, cells[i]);
    if (std::abs(zz) >= 4) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("insufficient samples and missing classes") {
  const auto r = simulate(inflated(8, 5000));
  CHECK_THROWS_AS(estimate_cond_mi(r, 2, 2), InsufficientSamples);
  SimConfig c = inflated(80, 2000);
  c.source = SourceModel::poissonian(0.0);
  c.channel = ChannelConfig::symmetric(0.5, 0.0);
  const auto big = simulate(c);
  CHECK(big.pattern_pairs.empty());
  CHECK_THROWS_AS(estimate_cond_mi(big, 0, 0), DomainError);
}

TEST_CASE("tag stream formats") {
  SimConfig c = inflated(8, 2000);
  c.chunk_frames = 700;
  std::ostringstream csv, bin;
  write_tags(c, csv, TagFormat::csv);
  write_tags(c, bin, TagFormat::binary);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "side,bin");
  std::uint64_t rows = 0, clicks = 0, prev = 0;
  while (std::getline(in, line)) {
    CHECK((line[0] == 'A' || line[0] == 'B'));
    const auto bin_index = std::stoull(line.substr(2));
    CHECK(bin_index >= prev);
    prev = bin_index;
    ++rows;
  }
  for (std::uint64_t k = 0; k < chunk_count(c); ++k) {
    const auto s = simulate_chunk(c, k);
    for (std::size_t t = 0; t < s.a.size(); ++t) clicks += s.a[t] + s.b[t];
  }
  CHECK(rows == clicks);
  const std::string raw = bin.str();
  CHECK(raw.size() == 9 * rows);
  // first record decodes to the first CSV row
  std::istringstream again(csv.str());
  std::getline(again, line);
  std::getline(again, line);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[1 + i])) << (8 * i);
  CHECK(v == std::stoull(line.substr(2)));
  CHECK((raw[0] == 0) == (line[0] == 'A'));
}

TEST_CASE("three-bin single-click forms against the simulator") {
  // the three-bin window forms approximate the jump process;
  // report the gap on the K=1 class probability
  const int N = 12;
  SimConfig c = inflated(N, 2000000, 5);
  c.jitter = JitterProfile{{0.8, 0.15, 0.05}};
  const auto r = simulate(c);
  std::uint64_t k1 = 0;
  for (const auto& [cls, n] : r.class_counts)
    if (cls.first == 1) k1 += n;
  const auto b = poissonian_bin_probs(1e-2, c.channel);
  const auto s = single_patterns_J2(N, b.pA0, b.pAc, c.jitter);
  const double zz = z(static_cast<double>(k1), c.n_frames, s.total);
  MESSAGE("P(K_A=1) three-bin form " << s.total << ", simulated " << k1 / double(c.n_frames) << ", z = " << zz);
  CHECK(std::isfinite(zz));
}
