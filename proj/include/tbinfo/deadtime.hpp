#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "tbinfo/detection.hpp"
#include "tbinfo/frames.hpp"
#include "tbinfo/logmath.hpp"

namespace tbinfo {

/// Dead-time in whole time-bins after each click.
struct DeadTimeConfig {
  int md = 0;
};

/// 1 when every pair of consecutive clicks is at least md+1 bins apart
/// (at least md empty bins between them), 0 otherwise. Pattern is a string
/// of '0'/'1' read left to right.
bool delta(std::string_view pattern, int md);
/// Same for a bit mask over N bins (bit i = bin i).
bool delta(std::uint64_t mask, int N, int md);

/// Number of x-click patterns in N bins that survive the filter,
/// C(N - (x-1) md, x). Throws DomainError on u128 overflow.
u128 allowed_pattern_count(long N, int x, int md);
/// (N-md)(N-md-1)/2, or 0 when N <= md+1.
u128 allowed_two_click_count(long N, int md);

/// Counts of surviving (Alice, Bob) pattern pairs in class (x, y) grouped by
/// overlap L = lo, lo+1, ...
struct OverlapCounts {
  int lo = 0;
  std::vector<u128> by_overlap;
  u128 alice = 0;  ///< surviving x-click patterns
  u128 bob = 0;    ///< surviving y-click patterns
};
/// Dynamic programme over bins; cost O(N x y min(x,y) (md+1)^2).
OverlapCounts overlap_counts(int N, int x, int y, int md);
/// Closed-form counts for the (2,2) class, O(N).
OverlapCounts overlap_counts_22(long N, int md);

/// Filtered pattern probabilities with the edge-neglecting divisors:
/// joint P(r,s) D(r) D(s) / P00^(2 md), marginals P(X_r) D(X_r) / (P0^X)^(2 md).
struct DeadTimePatternProbs {
  double joint = 0.0;
  double alice = 0.0;
  double bob = 0.0;
};
DeadTimePatternProbs deadtime_pattern_probs(std::uint64_t r, std::uint64_t s, int N,
                                            const BinProbabilities& bins, int md);

/// Filtered class probability from overlap counts (divisor P00^(2 md)).
/// Summed over classes this is not normalised once md > 0.
double deadtime_class_prob(long N, int x, int y, const OverlapCounts& counts,
                           const BinProbabilities& bins, int md);
/// Conditional MI for a filtered class, conditioning on the filtered
/// single-side marginals (uniform over surviving patterns).
double cond_mi_deadtime(int x, int y, const OverlapCounts& counts, const BinProbabilities& bins);

/// General class through the DP counts.
double cond_mi_deadtime(int N, int x, int y, const BinProbabilities& bins, int md);
double deadtime_class_prob(int N, int x, int y, const BinProbabilities& bins, int md);

/// (2,2) class through the closed-form counts. Throws DomainError when no
/// two-click pattern survives (N <= md+1).
double cond_mi_deadtime_22(long N, const BinProbabilities& bins, int md);
PairBits bits_per_pair_deadtime_22(long N, const BinProbabilities& bins, const PairRates& rates, int md);
/// (1,1) frames are unaffected by dead-time once N > md.
PairBits bits_per_pair_deadtime_11(int N, const BinProbabilities& bins, const PairRates& rates, int md);

}  // namespace tbinfo
