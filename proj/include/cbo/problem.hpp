#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "cbo/dynamics.hpp"

namespace cbo {

using ScalarField = std::function<double(std::span<const double>)>;

/// Distribution of the initial particles.
struct InitDistribution {
  enum class Kind { UniformBox, Gaussian };
  Kind kind = Kind::UniformBox;
  double low = -2.0;  ///< UniformBox: every coordinate uniform on [low, high]
  double high = 2.0;
  double mean = 0.0;  ///< Gaussian: every coordinate N(mean, stddev^2)
  double stddev = 1.0;

  static InitDistribution uniform(double low, double high) {
    return {Kind::UniformBox, low, high, 0.0, 1.0};
  }
  static InitDistribution gaussian(double mean, double stddev) {
    return {Kind::Gaussian, -2.0, 2.0, mean, stddev};
  }
  void validate() const;
};

/// min j(x) subject to x in M, with an exact penalty r that is >= 0 everywhere
/// and vanishes exactly on M. Immutable after construction.
struct Problem {
  std::string name;
  std::size_t dimension = 0;
  ScalarField objective;
  ScalarField penalty;
  double feasibility_tolerance = 1e-9;
  std::optional<Point> known_solution;
  std::optional<double> known_beta_bar;
  InitDistribution init;

  bool is_feasible(std::span<const double> x) const { return penalty(x) <= feasibility_tolerance; }
};

inline std::span<const double> as_span(const Point& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

}  // namespace cbo
