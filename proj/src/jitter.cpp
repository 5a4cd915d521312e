#include "tbinfo/jitter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tbinfo/errors.hpp"

namespace tbinfo {

int JitterProfile::max_jump() const {
  for (std::size_t n = j.size(); n-- > 0;) {
    if (j[n] > 0.0) return static_cast<int>(n);
  }
  return 0;
}

void JitterProfile::validate() const {
  if (j.empty()) throw std::invalid_argument("jitter profile is empty");
  for (double v : j) {
    if (!(v >= 0.0)) throw std::invalid_argument("jitter probabilities must be >= 0");
  }
  const double s = std::accumulate(j.begin(), j.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("jitter probabilities must sum to 1");
}

namespace {

double pow00(const JitterEvents& ev, int k) { return std::exp(k_log(k, ev.p00)); }

void require_n(int N) {
  if (N < 6) throw DomainError("jitter pattern probabilities need N >= 6");
}

void require_two_point(const JitterProfile& p) {
  p.validate();
  if (p.max_jump() > 1) throw DomainError("event probabilities cover J0 and J1 only; use the J2 forms or the simulator");
}

}  // namespace

JitterEvents jitter_events(const BinProbabilities& b, const JitterProfile& profile, bool symmetric) {
  require_two_point(profile);
  const double j0 = profile.J(0);
  const double j1 = profile.J(1);
  JitterEvents ev;
  ev.p00 = b.p00;
  ev.alice = {j0 * b.pAc * b.pA0 + j1 * b.pAc, b.pA0 + j1 * b.pAc};
  ev.bob = {j0 * b.pBc * b.pB0 + j1 * b.pBc, b.pB0 + j1 * b.pBc};

  if (symmetric) {
    const double scale = std::max({b.pc0, b.p0c, 1e-300});
    if (std::abs(b.pc0 - b.p0c) > 1e-12 * scale || std::abs(b.pAc - b.pBc) > 1e-12 * std::max(b.pAc, 1e-300)) {
      throw DomainError("equal-loss jitter forms need P0c = Pc0");
    }
    const double p0c = b.p0c;
    const double p0 = b.pA0;
    const double pc = b.pAc;
    ev.p11 = j0 * j0 * b.p00 * b.pcc + 2 * j0 * j1 * p0c * p0c + j1 * j1 * b.pcc;
    ev.pe00 = b.p00 + j1 * j1 * b.pcc + 2 * j1 * p0c;
    ev.p1star = j0 * j0 * b.p00 * b.pc0 * b.pc0 + j1 * j1 * pc * p0 * b.pc0 +
                j0 * j1 * p0 * (b.p00 * b.pcc + p0c * p0c);
    ev.pstar1 = ev.p1star;
    ev.p10 = j0 * b.p00 * b.pc0 + j1 * b.pc0 * p0 + j0 * j1 * b.p00 * b.pcc + j1 * j1 * b.pc0 * pc;
    ev.p01 = ev.p10;
    return ev;
  }

  ev.p11 = j0 * j0 * b.p00 * b.pcc + 2 * j0 * j1 * b.p0c * b.pc0 + j1 * j1 * b.pcc;
  ev.pe00 = b.p00 + j1 * j1 * b.pcc + j1 * (b.p0c + b.pc0);
  ev.p1star = j0 * j0 * b.p00 * b.pc0 * b.p0c + j1 * j1 * b.pBc * b.pA0 * b.pc0 +
              j0 * j1 * (b.pA0 * b.p00 * b.pcc + b.pB0 * b.p0c * b.pc0);
  ev.pstar1 = j0 * j0 * b.p00 * b.pc0 * b.p0c + j1 * j1 * b.pAc * b.pB0 * b.p0c +
              j0 * j1 * (b.pB0 * b.p00 * b.pcc + b.pA0 * b.p0c * b.pc0);
  ev.p10 = j0 * b.p00 * b.pc0 + j1 * b.pc0 * b.pB0 + j0 * j1 * b.p00 * b.pcc + j1 * j1 * b.pc0 * b.pBc;
  ev.p01 = j0 * b.p00 * b.p0c + j1 * b.p0c * b.pA0 + j0 * j1 * b.p00 * b.pcc + j1 * j1 * b.p0c * b.pAc;
  return ev;
}

ApproxCells pattern_probs_approx(int N, const JitterEvents& ev) {
  require_n(N);
  ApproxCells c;
  c.same = ev.p11 * ev.pe00 * pow00(ev, N - 3);
  c.adj_ab = ev.p1star * ev.pe00 * pow00(ev, N - 4);
  c.adj_ba = ev.pstar1 * ev.pe00 * pow00(ev, N - 4);
  c.far = ev.p10 * ev.p01 * ev.pe00 * pow00(ev, N - 5);
  return c;
}

double p11_class_approx(int N, const ApproxCells& c) {
  const double n = N;
  return n * c.same + (n - 1) * (c.adj_ab + c.adj_ba) + (n - 1) * (n - 2) * c.far;
}

std::vector<CellClass> approx_classes(int N, const JitterEvents& ev) {
  const ApproxCells c = pattern_probs_approx(N, ev);
  const long n = N;
  return {{"same", n, c.same}, {"adj_ab", n - 1, c.adj_ab}, {"adj_ba", n - 1, c.adj_ba}, {"far", (n - 1) * (n - 2), c.far}};
}

double exact_cell(int N, int i, int j, const JitterEvents& ev) {
  require_n(N);
  if (i < 1 || j < 1 || i > N || j > N) throw DomainError("cell index outside the frame");
  const int a = std::min(i, j);
  const int b = std::max(i, j);
  if (i == j) {
    if (i == 1) return ev.p11 * ev.pe00 * pow00(ev, N - 2);
    if (i == N) return ev.p11 * pow00(ev, N - 2);
    return ev.p11 * ev.pe00 * pow00(ev, N - 3);
  }
  if (b - a == 1) {
    const double e = i < j ? ev.p1star : ev.pstar1;
    if (a == 1) return e * ev.pe00 * pow00(ev, N - 3);
    if (b == N) return e * pow00(ev, N - 3);
    return e * ev.pe00 * pow00(ev, N - 4);
  }
  const double f = ev.p10 * ev.p01;
  if (a == 1 && b == N) return f * pow00(ev, N - 3);
  if (a == 1) return f * ev.pe00 * pow00(ev, N - 4);
  if (b == N) return f * pow00(ev, N - 4);
  return f * ev.pe00 * pow00(ev, N - 5);
}

std::vector<CellClass> pattern_probs_exact(int N, const JitterEvents& ev) {
  require_n(N);
  const long n = N;
  const long far_edge = 2 * (n - 3);
  const long far_interior = (n - 1) * (n - 2) - 2 * far_edge - 2;
  return {
      {"diag_first", 1, exact_cell(N, 1, 1, ev)},
      {"diag_interior", n - 2, exact_cell(N, 2, 2, ev)},
      {"diag_last", 1, exact_cell(N, N, N, ev)},
      {"adj_first_ab", 1, exact_cell(N, 1, 2, ev)},
      {"adj_first_ba", 1, exact_cell(N, 2, 1, ev)},
      {"adj_interior_ab", n - 3, exact_cell(N, 2, 3, ev)},
      {"adj_interior_ba", n - 3, exact_cell(N, 3, 2, ev)},
      {"adj_last_ab", 1, exact_cell(N, N - 1, N, ev)},
      {"adj_last_ba", 1, exact_cell(N, N, N - 1, ev)},
      {"far_first", far_edge, exact_cell(N, 1, 3, ev)},
      {"far_corner", 2, exact_cell(N, 1, N, ev)},
      {"far_last", far_edge, exact_cell(N, 2, N, ev)},
      {"far_interior", far_interior, exact_cell(N, 2, 4, ev)},
  };
}

std::vector<double> exact_table(int N, const JitterEvents& ev) {
  require_n(N);
  std::vector<double> t(static_cast<std::size_t>(N) * N);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) t[static_cast<std::size_t>(i - 1) * N + (j - 1)] = exact_cell(N, i, j, ev);
  return t;
}

double h_d_from_classes(int N, const std::vector<CellClass>& classes, const PairRates& rates) {
  if (!(rates.detected > 0.0)) throw DomainError("no detected pairs: need lambda*etaA*etaB + qA*qB > 0");
  double p = 0.0;
  for (const CellClass& c : classes) p += c.multiplicity * c.prob;
  if (!(p > 0.0)) return 0.0;
  // sum over cells of P log2(P N^2 / p): the conditional MI of the (1,1) class times p
  const double scale = static_cast<double>(N) * N / p;
  double s = 0.0;
  for (const CellClass& c : classes)
    if (c.prob > 0.0) s += c.multiplicity * c.prob * std::log2(c.prob * scale);
  return s / (N * rates.detected);
}

double h_d_jitter(int N, const JitterEvents& ev, const PairRates& rates, bool exact) {
  return h_d_from_classes(N, exact ? pattern_probs_exact(N, ev) : approx_classes(N, ev), rates);
}

std::vector<JitterCompareRow> jitter_compare(const std::vector<int>& Ns, const JitterEvents& ev,
                                             const PairRates& rates) {
  std::vector<JitterCompareRow> rows;
  for (int N : Ns) {
    JitterCompareRow r;
    r.N = N;
    r.exact = h_d_jitter(N, ev, rates, true);
    r.approx = h_d_jitter(N, ev, rates, false);
    r.pct_diff = 100.0 * std::abs(r.exact - r.approx) / r.exact;
    rows.push_back(r);
  }
  return rows;
}

namespace {

void require_j2(const JitterProfile& p) {
  p.validate();
  if (p.max_jump() > 2) throw DomainError("closed forms cover J0, J1 and J2 only; use the simulator");
}

}  // namespace

J2Marginals extended_marginals_J2(double p0, double pc, const JitterProfile& profile) {
  require_j2(profile);
  const double j0 = profile.J(0), j1 = profile.J(1), j2 = profile.J(2);
  return {pc * (j2 + j1 * p0 + j0 * p0 * p0), j2 * pc + j1 * p0 * pc + p0 * p0};
}

double extended_p11_J2(const BinProbabilities& b, const JitterProfile& profile) {
  require_j2(profile);
  const double j0 = profile.J(0), j1 = profile.J(1), j2 = profile.J(2);
  const double p0 = b.pA0, pc = b.pAc;
  return j0 * j0 * b.p00 * b.p00 * b.pcc + j1 * j1 * b.p00 * b.pcc + j2 * j2 * b.pcc +
         2 * j0 * j1 * b.p00 * b.pc0 * b.pcc + 2 * j0 * j2 * b.pc0 * p0 * pc + 2 * j1 * j2 * b.pc0 * pc;
}

J2SinglePatterns single_patterns_J2(int N, double p0, double pc, const JitterProfile& profile) {
  if (N < 5) throw DomainError("single-click patterns with J2 need N >= 5");
  const J2Marginals m = extended_marginals_J2(p0, pc, profile);
  auto pw = [&](int k) { return std::exp(k_log(k, p0)); };
  J2SinglePatterns s;
  s.first = m.p1 * m.pe * pw(N - 3);
  s.second = m.p1 * m.pe * pw(N - 4);
  s.interior = m.p1 * m.pe * pw(N - 5);
  s.second_last = m.p1 * m.pe * pw(N - 4);
  s.last = m.p1 * pw(N - 3);
  s.total = s.first + s.second + (N - 4) * s.interior + s.second_last + s.last;
  return s;
}

}  // namespace tbinfo
