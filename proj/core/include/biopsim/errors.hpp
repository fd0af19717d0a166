#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biopsim {

/// Invalid or inconsistent configuration (dimension mismatch, bad schema,
/// non-positive step size, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the operation's domain (negative time, negative depth).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A linear solve or integration produced a non-finite result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Jacobian too close to singular while damping is disabled.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, double min_singular_value)
      : std::runtime_error(what), min_singular_value_(min_singular_value) {}

  double min_singular_value() const noexcept { return min_singular_value_; }

 private:
  double min_singular_value_;
};

/// Simulation state became non-finite. Carries the index of the last record
/// that was still valid.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t last_valid_record)
      : std::runtime_error(what), last_valid_record_(last_valid_record) {}

  std::size_t last_valid_record() const noexcept { return last_valid_record_; }

 private:
  std::size_t last_valid_record_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace biopsim
