#include "cbo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cbo {

double quartic_term(double x) noexcept { return x * x * x * x / 5.0 - 2.0 * x * x + x; }

Problem make_test1() {
  Problem p;
  p.name = "test1";
  p.dimension = 1;
  p.objective = [](std::span<const double> x) { return quartic_term(x[0]) + 10.0; };
  p.penalty = [](std::span<const double> x) { return std::max(0.0, -x[0] - 1.5); };
  p.known_solution = Point::Constant(1, -1.5);
  p.known_beta_bar = 4.3;
  p.init = InitDistribution::gaussian(0.0, 1.0);
  return p;
}

double rastrigin2d_constraint(std::span<const double> x) {
  const double c = std::cos(std::numbers::pi / 6.0);
  const double s = std::sin(std::numbers::pi / 6.0);
  const double u = x[0] - 1.0;
  const double v = x[1] - 1.0;
  const double z0 = c * u - s * v;
  const double z1 = s * u + c * v;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 0.5 * ((z0 * z0 - 10.0 * std::cos(two_pi * z0)) + (z1 * z1 - 10.0 * std::cos(two_pi * z1))) + 5.0;
}

Point rastrigin2d_unconstrained_minimizer() {
  // Root of 0.8 x^3 - 4 x + 1 = 0 on the negative branch.
  double x = -2.35;
  for (int it = 0; it < 50; ++it) x -= (0.8 * x * x * x - 4.0 * x + 1.0) / (2.4 * x * x - 4.0);
  return Point::Constant(2, x);
}

Problem make_rastrigin2d() {
  Problem p;
  p.name = "rastrigin2d";
  p.dimension = 2;
  p.objective = [](std::span<const double> x) {
    return 0.5 * (quartic_term(x[0]) + quartic_term(x[1])) + 10.0;
  };
  p.penalty = [](std::span<const double> x) { return std::max(0.0, rastrigin2d_constraint(x)); };
  // Lies on the boundary g = 0 of the feasible disc around z = (-3, 1).
  p.known_solution = Point{{-2.0937448697881313, 1.6420373560420607}};
  p.init = InitDistribution::uniform(-3.0, 3.0);
  return p;
}

ScalarField make_j1(std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("j1 needs dimension >= 1");
  return [dim](std::span<const double> x) {
    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i) total += quartic_term(x[i]);
    return total / static_cast<double>(dim) + 10.0;
  };
}

Point ackley_shift() { return Point{{53.0 / 30.0, 23.0 / 15.0, 4.0 / 3.0, 16.0 / 15.0, 5.0 / 6.0}}; }

ScalarField make_j2(std::size_t dim) {
  if (dim != 5) throw std::invalid_argument("j2 is defined for dimension 5 only, got " + std::to_string(dim));
  return [o = ackley_shift()](std::span<const double> x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double squares = 0.0;
    double cosines = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const double y = x[i] - o[static_cast<Eigen::Index>(i)];
      squares += y * y;
      cosines += std::cos(two_pi * y);
    }
    return -20.0 * std::exp(-0.2 * std::sqrt(squares / 5.0)) - std::exp(cosines / 5.0) + 20.0 +
           std::numbers::e;
  };
}

double sphere_penalty(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return std::abs(std::sqrt(sq) - 1.0);
}

double torus_penalty(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("torus penalty needs dimension >= 2");
  const double last = x.back();
  double planar = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) planar += x[i] * x[i];
  const double radial = std::sqrt(planar) - 1.0;
  return std::abs(std::sqrt(radial * radial + last * last) - 0.5);
}

std::string benchmark5_name(Objective5 objective, Manifold manifold) {
  return std::string(objective == Objective5::J1 ? "j1" : "j2") +
         (manifold == Manifold::Sphere ? "-sphere" : "-torus");
}

namespace {

// Constrained minimisers found by multistart local search on the manifolds'
// parametrisations; tests re-check them against random sampling.
Point benchmark5_solution(Objective5 objective, Manifold manifold) {
  if (objective == Objective5::J1) {
    if (manifold == Manifold::Sphere) return Point::Constant(5, -1.0 / std::sqrt(5.0));
    const double a = -0.7457281456196987;
    return Point{{a, a, a, a, -0.0920364808172093}};
  }
  if (manifold == Manifold::Sphere) {
    return Point{{0.755418756844524, 0.5342625293281845, 0.3447015736696622, 0.0920314456272382,
                  -0.12890729106122722}};
  }
  return Point{{0.7950613923896117, 0.5638908431414262, 0.3657489933696995, 1.0569355104765668,
                -0.1271214935835564}};
}

}  // namespace

Problem make_benchmark5(Objective5 objective, Manifold manifold) {
  constexpr std::size_t dim = 5;
  Problem p;
  p.name = benchmark5_name(objective, manifold);
  p.dimension = dim;
  p.objective = objective == Objective5::J1 ? make_j1(dim) : make_j2(dim);
  p.penalty = manifold == Manifold::Sphere ? ScalarField(sphere_penalty) : ScalarField(torus_penalty);
  p.known_solution = benchmark5_solution(objective, manifold);
  p.init = InitDistribution::uniform(-2.0, 2.0);
  return p;
}

}  // namespace cbo

namespace cbo {

void InitDistribution::validate() const {
  if (kind == Kind::UniformBox) {
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
      throw std::invalid_argument("uniform init needs finite low < high");
    }
  } else if (!std::isfinite(mean) || !(stddev > 0.0) || !std::isfinite(stddev)) {
    throw std::invalid_argument("gaussian init needs finite mean and stddev > 0");
  }
}

}  // namespace cbo
