#pragma once

#include <stdexcept>
#include <string>

namespace tbinfo {

/// Parameters outside the model's domain (zero-probability class, empty
/// frame class, P00 = 0 under dead-time, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Too few Monte Carlo samples in a frame class to estimate anything.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tbinfo
