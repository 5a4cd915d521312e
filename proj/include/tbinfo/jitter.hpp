#pragma once

#include <string>
#include <vector>

#include "tbinfo/detection.hpp"
#include "tbinfo/frames.hpp"

namespace tbinfo {

/// Discrete detector response: j[n] is the probability that a detected
/// photon registers n bins late.
struct JitterProfile {
  std::vector<double> j{1.0};

  static JitterProfile none() { return {}; }
  static JitterProfile two_point(double j0) { return {{j0, 1.0 - j0}}; }
  double J(std::size_t n) const { return n < j.size() ? j[n] : 0.0; }
  /// Largest n with j[n] > 0.
  int max_jump() const;
  /// Throws std::invalid_argument unless all j[n] >= 0 and they sum to 1 within 1e-12.
  void validate() const;
};

/// Single-side window probabilities: p1 for "click in this bin, none in the
/// bin before", pe for "no click in the last bin of a frame".
struct SideEvents {
  double p1 = 0.0;
  double pe = 1.0;
};

/// Event probabilities for J0 + J1 = 1.
struct JitterEvents {
  SideEvents alice, bob;
  double p11 = 0.0;     ///< both click in the same bin
  double pe00 = 1.0;    ///< neither clicks in the last bin
  double p1star = 0.0;  ///< Alice clicks in the bin directly before Bob
  double pstar1 = 0.0;  ///< Bob clicks in the bin directly before Alice
  double p10 = 0.0;     ///< Alice clicks, Bob silent nearby
  double p01 = 0.0;     ///< Bob clicks, Alice silent nearby
  double p00 = 1.0;     ///< bin probability P00, carried for the pattern products
};

/// Event probabilities. `symmetric` selects the equal-loss forms, which
/// require P0c = Pc0; otherwise the per-side (asymmetric) forms are used.
/// Throws DomainError if the profile has J2 or later non-zero.
JitterEvents jitter_events(const BinProbabilities& bins, const JitterProfile& profile, bool symmetric);

/// Edge-neglecting (1,1) pattern probabilities, valid for N >= 6.
struct ApproxCells {
  double same = 0.0;    ///< P(A_i, B_i)
  double adj_ab = 0.0;  ///< P(A_i, B_{i+1})
  double adj_ba = 0.0;  ///< P(A_{i+1}, B_i)
  double far = 0.0;     ///< P(A_i, B_j), |i-j| > 1
};
ApproxCells pattern_probs_approx(int N, const JitterEvents& ev);
/// N same + (N-1)(adj_ab + adj_ba) + (N-1)(N-2) far.
double p11_class_approx(int N, const ApproxCells& cells);

/// One group of (i, j) cells sharing a probability.
struct CellClass {
  std::string name;
  long multiplicity = 0;
  double prob = 0.0;
};

/// Edge-aware (1,1) pattern probabilities grouped into cell classes whose
/// multiplicities add to N^2. Requires N >= 6.
std::vector<CellClass> pattern_probs_exact(int N, const JitterEvents& ev);
/// Probability of the single cell (A_i, B_j), 1-based.
double exact_cell(int N, int i, int j, const JitterEvents& ev);
/// Full N x N table, row i-1 = Alice bin i.
std::vector<double> exact_table(int N, const JitterEvents& ev);

/// Approximate cells as a class list (same, adj_ab, adj_ba, far).
std::vector<CellClass> approx_classes(int N, const JitterEvents& ev);

/// Post-selected (1,1) information per detected pair from a class list:
/// [P (2 log2 N - log2 P) + sum m p log2 p] / (N den).
double h_d_from_classes(int N, const std::vector<CellClass>& classes, const PairRates& rates);
double h_d_jitter(int N, const JitterEvents& ev, const PairRates& rates, bool exact);

struct JitterCompareRow {
  int N = 0;
  double exact = 0.0;
  double approx = 0.0;
  double pct_diff = 0.0;  ///< 100 |exact - approx| / exact
};
std::vector<JitterCompareRow> jitter_compare(const std::vector<int>& Ns, const JitterEvents& ev,
                                             const PairRates& rates);

/// Three-bin window marginals for profiles up to J2.
struct J2Marginals {
  double p1 = 0.0;
  double pe = 1.0;
};
J2Marginals extended_marginals_J2(double p0, double pc, const JitterProfile& profile);
/// Same-bin joint event with J2 (symmetric loss; reads P1 as the marginal click).
double extended_p11_J2(const BinProbabilities& bins, const JitterProfile& profile);

/// Single-click pattern probabilities with J2: bins 1, 2, interior, N-1, N.
struct J2SinglePatterns {
  double first = 0.0;
  double second = 0.0;
  double interior = 0.0;
  double second_last = 0.0;
  double last = 0.0;
  /// P(K = 1) = first + second + (N-4) interior + second_last + last.
  double total = 0.0;
};
J2SinglePatterns single_patterns_J2(int N, double p0, double pc, const JitterProfile& profile);

}  // namespace tbinfo
