#include "tbinfo/detection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tbinfo/logmath.hpp"

namespace tbinfo {

void ChannelConfig::validate() const {
  auto eff = [](double v, const char* n) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(n) + " must lie in [0, 1], got " + std::to_string(v));
    }
  };
  auto dark = [](double v, const char* n) {
    if (!(v >= 0.0 && v < 1.0)) {
      throw std::invalid_argument(std::string(n) + " must lie in [0, 1), got " + std::to_string(v));
    }
  };
  eff(etaA, "etaA");
  eff(etaB, "etaB");
  dark(qA, "qA");
  dark(qB, "qB");
}

BinProbabilities BinProbabilities::from_joint(double p00, double p0c, double pc0, double pcc) {
  return {p00, p0c, pc0, pcc, p00 + p0c, pc0 + pcc, p00 + pc0, p0c + pcc};
}

void BinProbabilities::validate(double tol) const {
  for (double v : {p00, p0c, pc0, pcc, pA0, pAc, pB0, pBc}) {
    if (!(v >= 0.0 && v <= 1.0 + tol)) throw std::invalid_argument("bin probability outside [0, 1]");
  }
  if (std::abs(p00 + p0c + pc0 + pcc - 1.0) > tol) {
    throw std::invalid_argument("bin probabilities do not sum to 1");
  }
  if (std::abs(pA0 - (p00 + p0c)) > tol || std::abs(pAc - (pc0 + pcc)) > tol ||
      std::abs(pB0 - (p00 + pc0)) > tol || std::abs(pBc - (p0c + pcc)) > tol) {
    throw std::invalid_argument("bin marginals inconsistent with joint probabilities");
  }
}

BinProbabilities bare_bin_probs(const SourceModel& model, const ChannelConfig& cfg) {
  cfg.validate();
  const double a = cfg.etaA;
  const double b = cfg.etaB;
  if (model.kind() == SourceKind::poissonian) {
    const double lam = model.mean();
    // M(1,1) = exp(-lam (a + b - ab)); the differences use expm1.
    const double pi00 = std::exp(-lam * (a + b - a * b));
    const double pic0 = -std::exp(-lam * b) * std::expm1(-lam * a * (1.0 - b));
    const double pi0c = -std::exp(-lam * a) * std::expm1(-lam * b * (1.0 - a));
    const double clickA = -std::expm1(-lam * a);
    const double clickB = -std::expm1(-lam * b);
    const double picc = clickA * clickB + std::exp(-lam * (a + b)) * std::expm1(lam * a * b);
    return BinProbabilities::from_joint(pi00, pi0c, pic0, picc);
  }

  const double la = a < 1.0 ? std::log1p(-a) : kNegInf;
  const double lb = b < 1.0 ? std::log1p(-b) : kNegInf;
  double pi00 = 0.0, pic0 = 0.0, pi0c = 0.0, picc = 0.0;
  double running = 0.0;
  const auto pmf = model.support();
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    const double p = pmf[m];
    if (m == 0) {
      pi00 += p;
      running += p;
      continue;
    }
    const double md = static_cast<double>(m);
    const double missA = std::exp(md * la);  // (1 - etaA)^m
    const double missB = std::exp(md * lb);
    const double hitA = la == kNegInf ? 1.0 : -std::expm1(md * la);
    const double hitB = lb == kNegInf ? 1.0 : -std::expm1(md * lb);
    pi00 += p * missA * missB;
    pic0 += p * hitA * missB;
    pi0c += p * missA * hitB;
    const double term = p * hitA * hitB;
    picc += term;
    running += term;
    if (term < 1e-18 * picc && p < 1e-18 * running) break;
  }
  return BinProbabilities::from_joint(pi00, pi0c, pic0, picc);
}

BinProbabilities apply_dark_counts(const BinProbabilities& pi, double qA, double qB) {
  ChannelConfig{1.0, 1.0, qA, qB}.validate();
  const double p00 = (1.0 - qA) * (1.0 - qB) * pi.p00;
  const double p0c = (1.0 - qA) * pi.p0c + (1.0 - qA) * qB * pi.p00;
  const double pc0 = (1.0 - qB) * pi.pc0 + qA * (1.0 - qB) * pi.p00;
  const double pcc = pi.pcc + qA * pi.p0c + qB * pi.pc0 + qA * qB * pi.p00;
  BinProbabilities out = BinProbabilities::from_joint(p00, p0c, pc0, pcc);
  out.pA0 = (1.0 - qA) * pi.pA0;
  out.pB0 = (1.0 - qB) * pi.pB0;
  return out;
}

BinProbabilities poissonian_bin_probs(double lambda, const ChannelConfig& cfg) {
  cfg.validate();
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const double a = cfg.etaA;
  const double b = cfg.etaB;
  const double l1qA = std::log1p(-cfg.qA);
  const double l1qB = std::log1p(-cfg.qB);
  // P00 = (1-qA)(1-qB) e^{-lam(a+b-ab)}
  const double p00 = std::exp(l1qA + l1qB - lambda * (a + b - a * b));
  // P0c = (1-qA) e^{-lam a} - P00 = (1-qA) e^{-lam a} [1 - (1-qB) e^{-lam b (1-a)}]
  const double p0c = std::exp(l1qA - lambda * a) * -std::expm1(l1qB - lambda * b * (1.0 - a));
  const double pc0 = std::exp(l1qB - lambda * b) * -std::expm1(l1qA - lambda * a * (1.0 - b));
  // Pcc = 1 - (1-qA) e^{-lam a} - (1-qB) e^{-lam b} + P00
  //     = cA cB + (1-qA)(1-qB) e^{-lam(a+b)} (e^{lam ab} - 1)
  const double cA = -std::expm1(l1qA - lambda * a);
  const double cB = -std::expm1(l1qB - lambda * b);
  const double pcc = cA * cB + std::exp(l1qA + l1qB - lambda * (a + b)) * std::expm1(lambda * a * b);
  return {p00, p0c, pc0, pcc, std::exp(l1qA - lambda * a), cA, std::exp(l1qB - lambda * b), cB};
}

BinProbabilities bin_probs(const SourceModel& model, const ChannelConfig& cfg) {
  if (model.kind() == SourceKind::poissonian) return poissonian_bin_probs(model.mean(), cfg);
  return apply_dark_counts(bare_bin_probs(model, cfg), cfg.qA, cfg.qB);
}

double bin_mutual_info(const BinProbabilities& b) {
  auto term = [](double pij, double pi, double pj) {
    return pij > 0.0 ? pij * std::log2(pij / (pi * pj)) : 0.0;
  };
  return term(b.p00, b.pA0, b.pB0) + term(b.p0c, b.pA0, b.pBc) + term(b.pc0, b.pAc, b.pB0) +
         term(b.pcc, b.pAc, b.pBc);
}

}  // namespace tbinfo
