#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbo {

/// Raised when a particle coordinate, objective value or penalty value stops
/// being finite. Carries the offending particle index (when known) and point.
class NumericalError : public std::runtime_error {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  NumericalError(const std::string& what, std::size_t index, std::vector<double> point = {})
      : std::runtime_error(what), index_(index), point_(std::move(point)) {}

  std::size_t index() const noexcept { return index_; }
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::size_t index_;
  std::vector<double> point_;
};

}  // namespace cbo
