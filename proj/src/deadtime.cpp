#include "tbinfo/deadtime.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tbinfo/errors.hpp"

namespace tbinfo {

namespace {

void require_md(int md) {
  if (md < 0) throw DomainError("dead-time must be >= 0 bins");
}

u128 binomial_big(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  if (log_binomial(n, k) / kLn2 + std::log2(static_cast<double>(n) + 1.0) > 126.0) {
    throw DomainError("pattern count overflows 128 bits");
  }
  u128 c = 1;
  for (long i = 0; i < k; ++i) c = c * static_cast<u128>(n - i) / static_cast<u128>(i + 1);
  return c;
}

double log_count(u128 c) { return c == 0 ? kNegInf : std::log(to_double(c)); }

struct Weighted {
  double log_z = kNegInf;
  std::vector<double> u;   // per-L exponent relative to P00^(N-x-y+lo)
  std::vector<double> lw;  // log(count_L / (alice * bob)) + u_L
  double log_v = kNegInf;  // log(alice * bob)
};

Weighted weigh(int x, int y, const OverlapCounts& counts, const BinProbabilities& b) {
  Weighted w;
  w.log_v = log_count(counts.alice) + log_count(counts.bob);
  // overlap fractions sum to one; working with them keeps log(alice*bob) out of the MI sum
  std::vector<double> frac(counts.by_overlap.size());
  double total = 0.0;
  for (std::size_t i = 0; i < frac.size(); ++i) total += frac[i] = to_double(counts.by_overlap[i]);
  LogSumExp lse;
  for (std::size_t i = 0; i < counts.by_overlap.size(); ++i) {
    const int L = counts.lo + static_cast<int>(i);
    const double v = k_log(L - counts.lo, b.p00) + k_log(L, b.pcc) + k_log(x - L, b.pc0) + k_log(y - L, b.p0c);
    const double l = v == kNegInf || frac[i] == 0.0 ? kNegInf : std::log(frac[i] / total) + v;
    w.u.push_back(v);
    w.lw.push_back(l);
    lse.add(l);
  }
  w.log_z = lse.value();
  return w;
}

}  // namespace

bool delta(std::string_view pattern, int md) {
  require_md(md);
  long last = -1;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c != '0' && c != '1') throw std::invalid_argument("pattern must contain only '0' and '1'");
    if (c == '1') {
      if (last >= 0 && static_cast<long>(i) - last <= md) return false;
      last = static_cast<long>(i);
    }
  }
  return true;
}

bool delta(std::uint64_t mask, int N, int md) {
  require_md(md);
  if (N < 0 || N > 64) throw DomainError("bit-mask patterns need N <= 64");
  int last = -1;
  for (int i = 0; i < N; ++i) {
    if ((mask >> i) & 1u) {
      if (last >= 0 && i - last <= md) return false;
      last = i;
    }
  }
  return true;
}

u128 allowed_pattern_count(long N, int x, int md) {
  require_md(md);
  if (x < 0 || N < 0) return 0;
  if (x == 0) return 1;
  const long n = N - static_cast<long>(x - 1) * md;
  return n < x ? 0 : binomial_big(n, x);
}

u128 allowed_two_click_count(long N, int md) {
  require_md(md);
  if (N <= md + 1) return 0;
  const auto n = static_cast<u128>(N - md);
  return n * (n - 1) / 2;
}

OverlapCounts overlap_counts(int N, int x, int y, int md) {
  require_md(md);
  if (N < 1 || x < 0 || y < 0 || x > N || y > N) throw DomainError("invalid frame class");
  const auto [lo, hi] = overlap_range(N, x, y);
  allowed_pattern_count(N, std::max(x, y), 0);  // overflow guard on the largest count
  const int g = md + 1;  // distance cap: a click is allowed once the distance reaches md+1
  const int nl = std::min(x, y) + 1;
  // state index (a, b, l, da, db), da/db in 1..g stored as 0..g-1
  auto idx = [&](int a, int b, int l, int da, int db) {
    return ((((static_cast<std::size_t>(a) * (y + 1) + b) * nl + l) * g + (da - 1)) * g + (db - 1));
  };
  const std::size_t size = static_cast<std::size_t>(x + 1) * (y + 1) * nl * g * g;
  std::vector<u128> cur(size, 0), next(size, 0);
  cur[idx(0, 0, 0, g, g)] = 1;
  for (int t = 0; t < N; ++t) {
    std::fill(next.begin(), next.end(), u128{0});
    for (int a = 0; a <= x; ++a)
      for (int b = 0; b <= y; ++b)
        for (int l = 0; l < nl; ++l)
          for (int da = 1; da <= g; ++da)
            for (int db = 1; db <= g; ++db) {
              const u128 c = cur[idx(a, b, l, da, db)];
              if (c == 0) continue;
              const int na = std::min(da + 1, g);
              const int nb = std::min(db + 1, g);
              const bool can_a = a < x && da == g;
              const bool can_b = b < y && db == g;
              next[idx(a, b, l, na, nb)] += c;
              if (can_a) next[idx(a + 1, b, l, 1, nb)] += c;
              if (can_b) next[idx(a, b + 1, l, na, 1)] += c;
              if (can_a && can_b) next[idx(a + 1, b + 1, l + 1, 1, 1)] += c;
            }
    std::swap(cur, next);
  }
  OverlapCounts out;
  out.lo = lo;
  if (lo <= hi) out.by_overlap.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (int l = lo; l <= hi; ++l)
    for (int da = 1; da <= g; ++da)
      for (int db = 1; db <= g; ++db) out.by_overlap[l - lo] += cur[idx(x, y, l, da, db)];
  out.alice = allowed_pattern_count(N, x, md);
  out.bob = allowed_pattern_count(N, y, md);
  return out;
}

OverlapCounts overlap_counts_22(long N, int md) {
  require_md(md);
  if (N < 2) throw DomainError("(2,2) class needs N >= 2");
  const u128 v = allowed_two_click_count(N, md);
  u128 sum_d2 = 0;
  for (long p = 1; p <= N; ++p) {
    const long d = std::max(0L, p - 1 - md) + std::max(0L, N - p - md);
    sum_d2 += static_cast<u128>(d) * static_cast<u128>(d);
  }
  OverlapCounts out;
  out.lo = static_cast<int>(std::max(0L, 4 - N));
  const u128 c2 = v;
  const u128 c1 = sum_d2 - 2 * v;
  const u128 c0 = v * v - c1 - c2;
  const u128 all[3] = {c0, c1, c2};
  for (int L = out.lo; L <= 2; ++L) out.by_overlap.push_back(all[L]);
  out.alice = v;
  out.bob = v;
  return out;
}

DeadTimePatternProbs deadtime_pattern_probs(std::uint64_t r, std::uint64_t s, int N, const BinProbabilities& b,
                                            int md) {
  require_md(md);
  if (md > 0 && !(b.p00 > 0.0)) throw DomainError("dead-time divisor needs P00 > 0");
  if (N < 1 || N > 64) throw DomainError("bit-mask patterns need 1 <= N <= 64");
  const int L = std::popcount(r & s);
  const int x = std::popcount(r);
  const int y = std::popcount(s);
  const bool dr = delta(r, N, md);
  const bool ds = delta(s, N, md);
  DeadTimePatternProbs out;
  if (dr && ds) {
    out.joint = std::exp(k_log(L, b.pcc) + k_log(x - L, b.pc0) + k_log(y - L, b.p0c) +
                         k_log(N - x - y + L, b.p00) - k_log(2 * md, b.p00));
  }
  if (dr) out.alice = std::exp(k_log(x, b.pAc) + k_log(N - x, b.pA0) - k_log(2 * md, b.pA0));
  if (ds) out.bob = std::exp(k_log(y, b.pBc) + k_log(N - y, b.pB0) - k_log(2 * md, b.pB0));
  return out;
}

double deadtime_class_prob(long N, int x, int y, const OverlapCounts& counts, const BinProbabilities& b, int md) {
  require_md(md);
  if (md > 0 && !(b.p00 > 0.0)) throw DomainError("dead-time divisor needs P00 > 0");
  const Weighted w = weigh(x, y, counts, b);
  if (w.log_z == kNegInf) return 0.0;
  const double base = k_log(static_cast<double>(N - x - y + counts.lo), b.p00);
  return std::exp(base + w.log_z + w.log_v - k_log(2.0 * md, b.p00));
}

double cond_mi_deadtime(int x, int y, const OverlapCounts& counts, const BinProbabilities& b) {
  const Weighted w = weigh(x, y, counts, b);
  if (w.log_z == kNegInf) throw DomainError("conditional MI undefined: filtered class has zero probability");
  double h = 0.0;
  for (std::size_t i = 0; i < w.u.size(); ++i) {
    if (w.lw[i] == kNegInf) continue;
    h += std::exp(w.lw[i] - w.log_z) * (w.u[i] - w.log_z);
  }
  return h / kLn2;
}

double cond_mi_deadtime(int N, int x, int y, const BinProbabilities& bins, int md) {
  return cond_mi_deadtime(x, y, overlap_counts(N, x, y, md), bins);
}

double deadtime_class_prob(int N, int x, int y, const BinProbabilities& bins, int md) {
  return deadtime_class_prob(N, x, y, overlap_counts(N, x, y, md), bins, md);
}

double cond_mi_deadtime_22(long N, const BinProbabilities& bins, int md) {
  if (allowed_two_click_count(N, md) == 0) {
    throw DomainError("no two-click pattern survives dead-time " + std::to_string(md) + " in N=" + std::to_string(N));
  }
  return cond_mi_deadtime(2, 2, overlap_counts_22(N, md), bins);
}

PairBits bits_per_pair_deadtime_22(long N, const BinProbabilities& bins, const PairRates& rates, int md) {
  if (!(rates.detected > 0.0)) throw DomainError("no detected pairs: need lambda*etaA*etaB + qA*qB > 0");
  if (allowed_two_click_count(N, md) == 0) {
    throw DomainError("no two-click pattern survives dead-time " + std::to_string(md) + " in N=" + std::to_string(N));
  }
  const OverlapCounts c = overlap_counts_22(N, md);
  const double per_frame = deadtime_class_prob(N, 2, 2, c, bins, md) * cond_mi_deadtime(2, 2, c, bins);
  PairBits out;
  out.detected = per_frame / (static_cast<double>(N) * rates.detected);
  out.generated = rates.generated > 0.0 ? per_frame / (static_cast<double>(N) * rates.generated)
                                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

PairBits bits_per_pair_deadtime_11(int N, const BinProbabilities& bins, const PairRates& rates, int md) {
  require_md(md);
  if (N <= md) throw DomainError("(1,1) frames under dead-time need N > md");
  return bits_per_pair_11(N, bins, rates);
}

}  // namespace tbinfo
