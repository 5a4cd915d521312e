#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace tbinfo {

__extension__ typedef unsigned __int128 u128;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

/// log C(n, k) via lgamma; -inf outside 0 <= k <= n.
double log_binomial(long n, long k);

/// log of N! / (L! (x-L)! (y-L)! (N-x-y+L)!), -inf for an empty L range.
double log_multinomial4(long n, long a, long b, long c, long d);

/// Exact C(n, k), n <= 64.
u128 binomial_exact(unsigned n, unsigned k);

/// k * log(p) with 0 * log(0) = 0.
inline double k_log(double k, double p) {
  if (k == 0.0) return 0.0;
  return p > 0.0 ? k * std::log(p) : kNegInf;
}

/// p * log2(p) with 0 log 0 = 0.
inline double plog2p(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

/// Streaming log-sum-exp. Rescales on every new maximum, so the running
/// sum stays in [1, n].
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == kNegInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

double log_sum_exp(std::span<const double> terms);

/// Converts a 128-bit count to double (rounded).
inline double to_double(u128 v) {
  return static_cast<double>(static_cast<std::uint64_t>(v >> 64)) * 18446744073709551616.0 +
         static_cast<double>(static_cast<std::uint64_t>(v));
}

}  // namespace tbinfo
