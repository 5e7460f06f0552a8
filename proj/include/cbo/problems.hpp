#pragma once

// Benchmark problems: the 1D box-constrained quartic, the 2D quartic with a
// rotated Rastrigin constraint, the d = 5 quartic/Ackley objectives on the
// sphere and torus, and a random convex QP generator with known solution.

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "cbo/problem.hpp"

namespace cbo {

/// Per-coordinate quartic x^4/5 - 2x^2 + x shared by every objective below.
double quartic_term(double x) noexcept;

/// x^4/5 - 2x^2 + x + 10 on x >= -1.5, penalty max(0, -x - 1.5).
Problem make_test1();

/// Constraint function of the 2D problem: z = R(pi/6)(x - (1,1)),
/// g = 1/2 sum_i (z_i^2 - 10 cos(2 pi z_i)) + 5.
double rastrigin2d_constraint(std::span<const double> x);
/// Unconstrained (infeasible) minimiser of the 2D objective.
Point rastrigin2d_unconstrained_minimizer();
/// 1/2 sum_i quartic(x_i) + 10 subject to g(x) <= 0, penalty max(0, g).
Problem make_rastrigin2d();

/// (1/d) sum_i quartic(x_i) + 10.
ScalarField make_j1(std::size_t dim);
/// Ackley function shifted by o = (53/30, 23/15, 4/3, 16/15, 5/6). dim must be 5.
ScalarField make_j2(std::size_t dim);
/// The Ackley shift vector o.
Point ackley_shift();

/// | |x| - 1 |, the distance to the unit sphere.
double sphere_penalty(std::span<const double> x);
/// | sqrt((sqrt(|x|^2 - x_d^2) - 1)^2 + x_d^2) - 0.5 |. Requires d >= 2.
double torus_penalty(std::span<const double> x);

enum class Objective5 { J1, J2 };
enum class Manifold { Sphere, Torus };

/// One of the four d = 5 benchmarks, initialised uniformly on [-2, 2]^5,
/// with its precomputed constrained minimiser.
Problem make_benchmark5(Objective5 objective, Manifold manifold);
/// "j1-sphere", "j1-torus", "j2-sphere", "j2-torus".
std::string benchmark5_name(Objective5 objective, Manifold manifold);

/// min 1/2 x^T A x - b^T x subject to H^T x + h0 = 0, x >= 0.
/// H is stored d x p so that H^T x is the p-vector of equality residuals.
struct QpInstance {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd H;
  Eigen::VectorXd h0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd multipliers;        ///< equality multipliers, length p
  Eigen::VectorXd bound_multipliers;  ///< multipliers of x >= 0, length d

  std::size_t dim() const noexcept { return static_cast<std::size_t>(A.rows()); }
  double objective(std::span<const double> x) const;
  /// |H^T x + h0|_1 + |max(0, -x)|_1.
  double penalty(std::span<const double> x) const;
  /// Max absolute residual over symmetry, feasibility and KKT conditions.
  double kkt_residual() const;
};

/// Deterministic in (dim, seed). dim >= 2.
QpInstance make_random_qp_instance(std::size_t dim, std::uint64_t seed);
Problem make_qp_problem(const QpInstance& instance);
std::pair<Problem, QpInstance> make_random_qp(std::size_t dim, std::uint64_t seed);

/// JSON text with row-major nested arrays; see docs/formats.md.
std::string qp_to_json(const QpInstance& instance);
QpInstance qp_from_json(const std::string& text);

}  // namespace cbo
