#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tbinfo/detection.hpp"
#include "tbinfo/logmath.hpp"
#include "tbinfo/source_model.hpp"

namespace tbinfo {

/// (K_A, K_B) = (x, y) frame class.
struct FrameClass {
  int x = 1;
  int y = 1;
  friend bool operator==(const FrameClass&, const FrameClass&) = default;
};

/// Valid overlap range max(0, x+y-N) <= L <= min(x, y); empty when lo > hi.
std::pair<int, int> overlap_range(int N, int x, int y);

/// Number of joint patterns with x and y clicks sharing L bins,
/// N! / [L! (x-L)! (y-L)! (N-x-y+L)!]. Throws DomainError for invalid L.
double omega(int N, int x, int y, int L);
double log_omega(int N, int x, int y, int L);
/// Exact count for N <= 64.
u128 omega_exact(int N, int x, int y, int L);

/// P(K = x) = C(N, x) pc^x p0^(N-x).
double p_k(int N, int x, double p0, double pc);
double log_p_k(int N, int x, double p0, double pc);

/// P(K_A = x, K_B = y), summed over overlaps in the log domain.
double p_kk(int N, int x, int y, const BinProbabilities& bins);
double log_p_kk(int N, int x, int y, const BinProbabilities& bins);

/// Conditional mutual information H(A:B | K_A = x, K_B = y) in bits,
/// grouping the joint patterns by overlap L. Throws DomainError when the
/// class has zero probability.
double cond_mi(int N, int x, int y, const BinProbabilities& bins);

/// log2 C(N, x): the lossless (etaA = etaB = 1, q = 0) conditional MI.
double lossless_mi(int N, int x);

/// Mean pairs per bin: generated = lambda, detected = etaA etaB lambda + qA qB.
struct PairRates {
  double generated = 0.0;
  double detected = 0.0;
};
PairRates pair_rates(double lambda, const ChannelConfig& channel);

struct PairBits {
  double detected = 0.0;
  /// NaN when lambda = 0 (no generated pairs).
  double generated = 0.0;
};

/// Shared bits per pair from (1,1)-frames, closed form with
/// Gamma = (N-1) Pc0 P0c + Pcc P00. Requires N >= 2.
PairBits bits_per_pair_11(int N, const BinProbabilities& bins, const PairRates& rates);
/// Shared bits per pair from (2,2)-frames. Requires N >= 4.
PairBits bits_per_pair_22(int N, const BinProbabilities& bins, const PairRates& rates);
/// Same normalisation for an arbitrary class, through cond_mi.
PairBits bits_per_pair(int N, FrameClass cls, const BinProbabilities& bins, const PairRates& rates);

/// Entropy bookkeeping for the announced click counts.
struct ClickCountEntropy {
  double joint = 0.0;       ///< H(K_A, K_B), bits
  double mutual = 0.0;      ///< I(K_A; K_B), bits
  double cond_mi_sum = 0.0; ///< sum_{x,y} P(x,y) H(A:B | x, y), bits per frame
  double truncation = 0.0;  ///< upper bound on the probability mass left out
  int x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
};

/// -sum P(x,y) log2 P(x,y), truncated to the x/y window whose binomial
/// tails are below tol_tail / 4 on each side. Also reports I(K_A;K_B) and
/// the P(x,y)-weighted conditional MI over the same window.
ClickCountEntropy h_kk(int N, const BinProbabilities& bins, double tol_tail = 1e-12);

struct InfoReport {
  double h_cond_per_frame = 0.0;      ///< sum over the requested classes of P(class) H(A:B|class)
  double bits_per_detected_pair = 0.0;
  double bits_per_generated_pair = 0.0;
  double p_class = 0.0;               ///< total probability of the requested classes
  double h_kk = 0.0;                  ///< H(K_A, K_B)
  double i_kk = 0.0;                  ///< I(K_A; K_B)
  double h_frame_per_frame = 0.0;     ///< N H_bin(A:B)
  double truncation = 0.0;
  std::vector<double> class_p;        ///< per requested class
  std::vector<double> class_cond_mi;  ///< per requested class
};

/// Information report for one frame size. Routes to lossless_mi when
/// etaA = etaB = 1 and qA = qB = 0 exactly.
InfoReport frame_info(int N, std::span<const FrameClass> classes, const SourceModel& source,
                      const ChannelConfig& channel);

}  // namespace tbinfo
