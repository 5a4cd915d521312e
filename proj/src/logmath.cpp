#include "tbinfo/logmath.hpp"

#include <algorithm>
#include <stdexcept>

namespace tbinfo {

double log_binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return kNegInf;
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_multinomial4(long n, long a, long b, long c, long d) {
  if (a < 0 || b < 0 || c < 0 || d < 0 || a + b + c + d != n) return kNegInf;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(a) + 1.0) -
         std::lgamma(static_cast<double>(b) + 1.0) - std::lgamma(static_cast<double>(c) + 1.0) -
         std::lgamma(static_cast<double>(d) + 1.0);
}

u128 binomial_exact(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (n > 64) throw std::out_of_range("binomial_exact: n > 64");
  k = std::min(k, n - k);
  u128 c = 1;
  for (unsigned i = 0; i < k; ++i) {
    // c * (n - i) is divisible by (i + 1); c is C(n, i) here.
    c = c * (n - i) / (i + 1);
  }
  return c;
}

double log_sum_exp(std::span<const double> terms) {
  LogSumExp acc;
  for (double t : terms) acc.add(t);
  return acc.value();
}

}  // namespace tbinfo
