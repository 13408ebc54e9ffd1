#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace truncnoise {

/// Thrown when an exact computation would exceed its configured term budget.
class resource_limit_error : public std::runtime_error {
 public:
  resource_limit_error(const std::string& what, std::size_t budget)
      : std::runtime_error(what), budget_(budget) {}
  std::size_t budget() const { return budget_; }

 private:
  std::size_t budget_;
};

/// Thrown when training produces a non-finite loss or non-finite parameters.
/// Carries the epoch and the last finite parameter snapshot.
class training_error : public std::runtime_error {
 public:
  training_error(const std::string& what, long epoch, std::vector<double> snapshot)
      : std::runtime_error(what), epoch_(epoch), snapshot_(std::move(snapshot)) {}
  long epoch() const { return epoch_; }
  const std::vector<double>& snapshot() const { return snapshot_; }

 private:
  long epoch_;
  std::vector<double> snapshot_;
};

/// Thrown when a bisection search cannot bracket its target.
class bracket_error : public std::runtime_error {
 public:
  bracket_error(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace truncnoise
