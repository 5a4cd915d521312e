#pragma once

#include "tbinfo/source_model.hpp"

namespace tbinfo {

/// Per-side total efficiencies (detector x channel) and per-bin dark-count
/// probabilities. After-pulsing is folded into qA/qB by the caller.
struct ChannelConfig {
  double etaA = 1.0;
  double etaB = 1.0;
  double qA = 0.0;
  double qB = 0.0;

  static ChannelConfig symmetric(double eta, double q) { return {eta, eta, q, q}; }
  bool is_symmetric() const { return etaA == etaB && qA == qB; }
  /// Throws std::invalid_argument unless 0 <= eta <= 1 and 0 <= q < 1.
  void validate() const;
};

/// Single time-bin joint click probabilities. First index is Alice, second
/// Bob; "0" is no click and "c" a click.
struct BinProbabilities {
  double p00 = 1.0;
  double p0c = 0.0;
  double pc0 = 0.0;
  double pcc = 0.0;
  double pA0 = 1.0;
  double pAc = 0.0;
  double pB0 = 1.0;
  double pBc = 0.0;

  /// Builds the marginals as sums of the joint entries.
  static BinProbabilities from_joint(double p00, double p0c, double pc0, double pcc);
  /// Throws std::invalid_argument if an entry leaves [0, 1], the joint does
  /// not sum to 1 within `tol`, or a marginal disagrees with the joint.
  void validate(double tol = 1e-12) const;
};

/// Dark-count-free probabilities pi_ij from the loss-decorated MGF:
/// pi_00 = M(1,1), pi_c0 = M(0,1) - M(1,1), pi_0c = M(1,0) - M(1,1) and
/// pi_cc = sum_n P_s(n) [1-(1-etaA)^n][1-(1-etaB)^n]. The differences are
/// evaluated term by term (or with expm1 for poissonian sources) so that
/// small click probabilities keep full relative precision.
BinProbabilities bare_bin_probs(const SourceModel& model, const ChannelConfig& cfg);

/// Adds independent per-side dark counts to dark-count-free probabilities.
BinProbabilities apply_dark_counts(const BinProbabilities& pi, double qA, double qB);

/// Closed-form joint probabilities for a poissonian source with dark counts.
BinProbabilities poissonian_bin_probs(double lambda, const ChannelConfig& cfg);

/// Source + channel -> P_ij. Uses the closed form for poissonian sources.
BinProbabilities bin_probs(const SourceModel& model, const ChannelConfig& cfg);

/// Mutual information (bits) between Alice's and Bob's click in one bin.
double bin_mutual_info(const BinProbabilities& bins);

}  // namespace tbinfo
