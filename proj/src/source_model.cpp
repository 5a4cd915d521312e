#include "tbinfo/source_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tbinfo {

namespace {

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace

SourceModel SourceModel::poissonian(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("poissonian source: lambda must be finite and >= 0");
  }
  return SourceModel(SourceKind::poissonian, lambda, {});
}

SourceModel SourceModel::generic(std::vector<double> pmf) {
  if (pmf.empty()) throw std::invalid_argument("generic source: empty pmf");
  double total = 0.0;
  double mean = 0.0;
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    if (!(pmf[m] >= 0.0)) throw std::invalid_argument("generic source: negative probability");
    total += pmf[m];
    mean += static_cast<double>(m) * pmf[m];
  }
  if (total < 1.0 - 1e-12 || total > 1.0 + 1e-15) {
    throw std::invalid_argument("generic source: pmf must sum to 1 (within 1e-12), got " +
                                std::to_string(total));
  }
  return SourceModel(SourceKind::generic, mean, std::move(pmf));
}

SourceModel SourceModel::truncated_poissonian(double lambda, double tail) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("truncated_poissonian: lambda must be >= 0");
  std::vector<double> pmf;
  double term = std::exp(-lambda);
  double acc = 0.0;
  for (std::size_t m = 0;; ++m) {
    pmf.push_back(term);
    acc += term;
    // Past the mode the remaining terms shrink geometrically with ratio
    // lambda / (m + 2), so term * ratio / (1 - ratio) bounds the tail.
    const double ratio = lambda / static_cast<double>(m + 2);
    const double next = term * lambda / static_cast<double>(m + 1);
    if (ratio < 1.0 && next / (1.0 - ratio) < tail) break;
    term = next;
  }
  // Renormalise away the (sub-tail) truncation so the generic invariant holds.
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  if (total > 1.0) {
    for (double& p : pmf) p /= total;
  }
  return generic(std::move(pmf));
}

double SourceModel::pmf(std::size_t m) const {
  if (kind_ == SourceKind::generic) return m < pmf_.size() ? pmf_[m] : 0.0;
  if (lambda_ == 0.0) return m == 0 ? 1.0 : 0.0;
  const double md = static_cast<double>(m);
  return std::exp(-lambda_ + md * std::log(lambda_) - std::lgamma(md + 1.0));
}

double mgf(const SourceModel& model, double nu, double xi, double etaA, double etaB) {
  require_unit(nu, "nu");
  require_unit(xi, "xi");
  require_unit(etaA, "etaA");
  require_unit(etaB, "etaB");
  if (model.kind() == SourceKind::poissonian) {
    return std::exp(model.mean() * (-etaA * nu - etaB * xi + etaA * etaB * nu * xi));
  }
  const double base = (1.0 - etaA * nu) * (1.0 - etaB * xi);
  double power = 1.0;
  double sum = 0.0;
  for (double p : model.support()) {
    sum += p * power;
    power *= base;
  }
  return sum;
}

}  // namespace tbinfo
