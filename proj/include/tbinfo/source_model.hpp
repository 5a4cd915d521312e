#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tbinfo {

enum class SourceKind { poissonian, generic };

/// Photon-pair number distribution per time-bin.
///
/// Generic models hold a truncated PMF p_0..p_M. Any tail mass beyond p_M is
/// treated as zero by mean(), pmf() and mgf(); choosing the truncation point
/// is the caller's job. The mean of a generic model is always computed from
/// the PMF.
class SourceModel {
 public:
  static SourceModel poissonian(double lambda);
  /// Requires p_m >= 0 and sum in [1 - 1e-12, 1].
  static SourceModel generic(std::vector<double> pmf);
  /// Generic model holding a Poissonian PMF truncated once the remaining
  /// tail mass is below `tail`.
  static SourceModel truncated_poissonian(double lambda, double tail = 1e-18);

  SourceKind kind() const { return kind_; }
  double mean() const { return lambda_; }
  double pmf(std::size_t m) const;
  /// Stored PMF for generic models, empty for poissonian.
  std::span<const double> support() const { return pmf_; }

 private:
  SourceModel(SourceKind kind, double lambda, std::vector<double> pmf)
      : kind_(kind), lambda_(lambda), pmf_(std::move(pmf)) {}

  SourceKind kind_;
  double lambda_;
  std::vector<double> pmf_;
};

/// M(nu, xi) = sum_m P_s(m) (1 - etaA nu)^m (1 - etaB xi)^m.
/// Closed form exp(lambda (-etaA nu - etaB xi + etaA etaB nu xi)) for
/// poissonian sources. Throws std::invalid_argument for nu, xi or
/// efficiencies outside [0, 1].
double mgf(const SourceModel& model, double nu, double xi, double etaA, double etaB);

}  // namespace tbinfo
