#include "tbinfo/frames.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tbinfo/errors.hpp"

namespace tbinfo {

namespace {

void require_class(int N, int x, int y) {
  if (N < 1 || x < 0 || y < 0 || x > N || y > N) {
    throw DomainError("invalid frame class (" + std::to_string(x) + "," + std::to_string(y) +
                      ") for N=" + std::to_string(N));
  }
}

/// Log-probability of the class plus the conditional MI, sharing one pass
/// over L. The common factor P00^(N-x-y+lo) is pulled out so that the
/// per-L weights only carry the parts that differ between overlaps.
struct ClassTerms {
  double log_p = kNegInf;
  double cond_mi_bits = 0.0;
};

ClassTerms class_terms(int N, int x, int y, const BinProbabilities& b, bool want_mi) {
  require_class(N, x, y);
  const auto [lo, hi] = overlap_range(N, x, y);
  const double base = k_log(N - x - y + lo, b.p00);
  ClassTerms out;
  if (base == kNegInf) return out;

  // u_L = log of Pcc^L Pc0^(x-L) P0c^(y-L) P00^(L-lo). Overlap weights are the
  // hypergeometric fractions Omega_L / (C(N,x) C(N,y)), built by ratio recursion
  // and normalised so that log C(N,x) C(N,y) never enters the MI sum.
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> lh(n, 0.0);
  for (int L = lo; L < hi; ++L) {
    const double r = static_cast<double>(x - L) * (y - L) / ((L + 1.0) * (N - x - y + L + 1.0));
    lh[L - lo + 1] = lh[L - lo] + std::log(r);
  }
  const double lh_norm = log_sum_exp(lh);
  std::vector<double> u(n, kNegInf);
  std::vector<double> lw(n, kNegInf);
  LogSumExp lse;
  for (int L = lo; L <= hi; ++L) {
    const double v = k_log(L - lo, b.p00) + k_log(L, b.pcc) + k_log(x - L, b.pc0) + k_log(y - L, b.p0c);
    u[L - lo] = v;
    if (v == kNegInf) continue;
    lw[L - lo] = lh[L - lo] - lh_norm + v;
    lse.add(lw[L - lo]);
  }
  const double log_u = lse.value();
  if (log_u == kNegInf) return out;
  out.log_p = base + log_binomial(N, x) + log_binomial(N, y) + log_u;
  if (!want_mi) return out;

  double h = 0.0;
  for (int L = lo; L <= hi; ++L) {
    if (u[L - lo] == kNegInf) continue;
    h += std::exp(lw[L - lo] - log_u) * (u[L - lo] - log_u);
  }
  out.cond_mi_bits = h / kLn2;
  return out;
}

double denominator_or_throw(const PairRates& rates) {
  if (!(rates.detected > 0.0)) throw DomainError("no detected pairs: need lambda*etaA*etaB + qA*qB > 0");
  return rates.detected;
}

PairBits normalise(double bits_per_frame_over_n, const PairRates& rates) {
  const double den = denominator_or_throw(rates);
  PairBits out;
  out.detected = bits_per_frame_over_n / den;
  out.generated = rates.generated > 0.0 ? bits_per_frame_over_n / rates.generated
                                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// w log2(r), zero when the weight vanishes
double ratio_term(double w, double r) { return w > 0.0 ? w * std::log2(r) : 0.0; }

}  // namespace

std::pair<int, int> overlap_range(int N, int x, int y) {
  return {std::max(0, x + y - N), std::min(x, y)};
}

double log_omega(int N, int x, int y, int L) {
  require_class(N, x, y);
  const auto [lo, hi] = overlap_range(N, x, y);
  if (L < lo || L > hi) {
    throw DomainError("overlap L=" + std::to_string(L) + " outside [" + std::to_string(lo) + "," +
                      std::to_string(hi) + "]");
  }
  return log_multinomial4(N, L, x - L, y - L, N - x - y + L);
}

double omega(int N, int x, int y, int L) { return std::exp(log_omega(N, x, y, L)); }

u128 omega_exact(int N, int x, int y, int L) {
  log_omega(N, x, y, L);  // range checks
  if (N > 64) throw DomainError("omega_exact: N > 64");
  // C(N, L) C(N-L, x-L) C(N-x, y-L); each partial product is itself a
  // multinomial no larger than the result.
  const auto n = static_cast<unsigned>(N);
  return binomial_exact(n, static_cast<unsigned>(L)) *
         binomial_exact(n - static_cast<unsigned>(L), static_cast<unsigned>(x - L)) *
         binomial_exact(n - static_cast<unsigned>(x), static_cast<unsigned>(y - L));
}

double log_p_k(int N, int x, double p0, double pc) {
  if (N < 0 || x < 0 || x > N) throw DomainError("p_k: need 0 <= x <= N");
  return log_binomial(N, x) + k_log(x, pc) + k_log(N - x, p0);
}

double p_k(int N, int x, double p0, double pc) { return std::exp(log_p_k(N, x, p0, pc)); }

double log_p_kk(int N, int x, int y, const BinProbabilities& bins) {
  return class_terms(N, x, y, bins, false).log_p;
}

double p_kk(int N, int x, int y, const BinProbabilities& bins) { return std::exp(log_p_kk(N, x, y, bins)); }

double cond_mi(int N, int x, int y, const BinProbabilities& bins) {
  const ClassTerms t = class_terms(N, x, y, bins, true);
  if (t.log_p == kNegInf) {
    throw DomainError("conditional MI undefined: class (" + std::to_string(x) + "," + std::to_string(y) +
                      ") has zero probability");
  }
  return t.cond_mi_bits;
}

double lossless_mi(int N, int x) {
  if (x < 0 || x > N) throw DomainError("lossless_mi: need 0 <= x <= N");
  return log_binomial(N, x) / kLn2;
}

PairRates pair_rates(double lambda, const ChannelConfig& channel) {
  return {lambda, channel.etaA * channel.etaB * lambda + channel.qA * channel.qB};
}

PairBits bits_per_pair_11(int N, const BinProbabilities& b, const PairRates& rates) {
  if (N < 2) throw DomainError("bits_per_pair_11 needs N >= 2");
  const double same = b.pcc * b.p00;
  const double split = b.pc0 * b.p0c;
  const double gamma = (N - 1) * split + same;
  double bracket = 0.0;
  if (gamma > 0.0) {
    // gamma log N - gamma log gamma + same log same + (N-1) split log split, regrouped
    // per cell so the large logarithms cancel inside each ratio
    const double n_over = N / gamma;
    bracket = ratio_term(same, same * n_over) + (N - 1) * ratio_term(split, split * n_over);
  }
  const double pre = std::exp(k_log(N - 2, b.p00));
  return normalise(pre * bracket, rates);
}

PairBits bits_per_pair_22(int N, const BinProbabilities& b, const PairRates& rates) {
  if (N < 4) throw DomainError("bits_per_pair_22 needs N >= 4");
  const double n = N;
  const double same = b.pcc * b.p00;
  const double mixed = b.pcc * b.pc0 * b.p0c * b.p00;
  const double split = b.pc0 * b.p0c;
  const double big_omega = 0.5 * same * same + (n - 2) * mixed + 0.25 * (n - 2) * (n - 3) * split * split;
  double bracket = 0.0;
  if (big_omega > 0.0) {
    const double k = n * (n - 1) / 4.0 / big_omega;
    const double s2 = same * same;
    const double x2 = split * split;
    bracket = 0.5 * ratio_term(s2, s2 * k) + (n - 2) * ratio_term(mixed, mixed * k) +
              0.25 * (n - 2) * (n - 3) * ratio_term(x2, x2 * k);
  }
  const double pre = (n - 1) * std::exp(k_log(N - 4, b.p00));
  return normalise(pre * bracket, rates);
}

PairBits bits_per_pair(int N, FrameClass cls, const BinProbabilities& bins, const PairRates& rates) {
  const ClassTerms t = class_terms(N, cls.x, cls.y, bins, true);
  const double per_frame = t.log_p == kNegInf ? 0.0 : std::exp(t.log_p) * t.cond_mi_bits;
  return normalise(per_frame / N, rates);
}

namespace {

struct Window {
  int lo = 0;
  int hi = 0;
  double tail = 0.0;
};

/// Smallest window around the binomial mode whose two tails are each below
/// `tol`, using the geometric bound on the ratio of successive terms.
Window binomial_window(int N, double p0, double pc, double tol) {
  if (pc <= 0.0) return {0, 0, 0.0};
  if (p0 <= 0.0) return {N, N, 0.0};
  const double odds = pc / p0;
  int mode = static_cast<int>(std::floor((N + 1) * pc));
  mode = std::clamp(mode, 0, N);
  Window w{mode, mode, 0.0};
  // upper tail: ratio r(k) = p(k+1)/p(k) = (N-k)/(k+1) * odds, decreasing in k
  for (;;) {
    if (w.hi >= N) break;
    const int k = w.hi + 1;
    const double r = (N - k) / static_cast<double>(k + 1) * odds;
    const double pk = std::exp(log_p_k(N, k, p0, pc));
    if (r < 1.0) {
      const double bound = pk / (1.0 - r);
      if (bound < tol) {
        w.tail += bound;
        break;
      }
    }
    w.hi = k;
  }
  // lower tail: s(k) = p(k-1)/p(k) = k/(N-k+1) / odds, decreasing as k falls
  for (;;) {
    if (w.lo <= 0) break;
    const int k = w.lo - 1;
    const double s = k / static_cast<double>(N - k + 1) / odds;
    const double pk = std::exp(log_p_k(N, k, p0, pc));
    if (s < 1.0) {
      const double bound = pk / (1.0 - s);
      if (bound < tol) {
        w.tail += bound;
        break;
      }
    }
    w.lo = k;
  }
  return w;
}

}  // namespace

ClickCountEntropy h_kk(int N, const BinProbabilities& bins, double tol_tail) {
  if (!(tol_tail > 0.0 && tol_tail <= 1e-6)) throw std::invalid_argument("h_kk: tol_tail must lie in (0, 1e-6]");
  if (N < 1) throw DomainError("h_kk: N must be >= 1");
  const Window wa = binomial_window(N, bins.pA0, bins.pAc, tol_tail / 4.0);
  const Window wb = binomial_window(N, bins.pB0, bins.pBc, tol_tail / 4.0);
  ClickCountEntropy out;
  out.x_lo = wa.lo;
  out.x_hi = wa.hi;
  out.y_lo = wb.lo;
  out.y_hi = wb.hi;
  out.truncation = wa.tail + wb.tail;

  std::vector<double> log_pa, log_pb;
  for (int x = wa.lo; x <= wa.hi; ++x) log_pa.push_back(log_p_k(N, x, bins.pA0, bins.pAc));
  for (int y = wb.lo; y <= wb.hi; ++y) log_pb.push_back(log_p_k(N, y, bins.pB0, bins.pBc));

  for (int x = wa.lo; x <= wa.hi; ++x) {
    for (int y = wb.lo; y <= wb.hi; ++y) {
      const ClassTerms t = class_terms(N, x, y, bins, true);
      if (t.log_p == kNegInf) continue;
      const double p = std::exp(t.log_p);
      out.joint -= p * t.log_p / kLn2;
      out.mutual += p * (t.log_p - log_pa[x - wa.lo] - log_pb[y - wb.lo]) / kLn2;
      out.cond_mi_sum += p * t.cond_mi_bits;
    }
  }
  return out;
}

InfoReport frame_info(int N, std::span<const FrameClass> classes, const SourceModel& source,
                      const ChannelConfig& channel) {
  channel.validate();
  const BinProbabilities bins = bin_probs(source, channel);
  const PairRates rates = pair_rates(source.mean(), channel);
  const bool lossless = channel.etaA == 1.0 && channel.etaB == 1.0 && channel.qA == 0.0 && channel.qB == 0.0;

  InfoReport r;
  for (const FrameClass& c : classes) {
    require_class(N, c.x, c.y);
    double p = 0.0;
    double h = 0.0;
    if (lossless) {
      if (c.x == c.y) {
        p = p_k(N, c.x, bins.pA0, bins.pAc);
        h = lossless_mi(N, c.x);
      }
    } else {
      const ClassTerms t = class_terms(N, c.x, c.y, bins, true);
      if (t.log_p != kNegInf) {
        p = std::exp(t.log_p);
        h = t.cond_mi_bits;
      }
    }
    r.class_p.push_back(p);
    r.class_cond_mi.push_back(h);
    r.p_class += p;
    r.h_cond_per_frame += p * h;
  }
  const double den = denominator_or_throw(rates);
  r.bits_per_detected_pair = r.h_cond_per_frame / (N * den);
  r.bits_per_generated_pair = rates.generated > 0.0 ? r.h_cond_per_frame / (N * rates.generated)
                                                    : std::numeric_limits<double>::quiet_NaN();
  const ClickCountEntropy e = h_kk(N, bins);
  r.h_kk = e.joint;
  r.i_kk = e.mutual;
  r.truncation = e.truncation;
  r.h_frame_per_frame = N * bin_mutual_info(bins);
  return r;
}

}  // namespace tbinfo
