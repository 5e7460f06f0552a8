#pragma once

// Exact penalty P(x, beta) = j(x) + beta r(x), the two ensemble feasibility
// measures and the adaptive beta/theta controller.

#include <span>

#include "cbo/dynamics.hpp"
#include "cbo/problem.hpp"

namespace cbo {

/// j(x) + beta r(x). Throws NumericalError (carrying x) on a non-finite j or r.
double penalty_value(const Problem& problem, std::span<const double> x, double beta);

/// Objective and penalty of every particle, evaluated once.
struct EnsembleValues {
  std::vector<double> objective;
  std::vector<double> penalty;

  /// P(x_i, beta) for every particle.
  std::vector<double> penalized(double beta) const;
};

EnsembleValues evaluate(const Problem& problem, const ParticleEnsemble& ensemble, std::size_t workers = 1);

enum class FeasibilityCheck { PlainMean, GibbsWeighted };

/// (1/N) sum_i r(x_i).
double violation_plain_mean(const ParticleEnsemble& ensemble, const Problem& problem);
/// sum_i r(x_i) exp(-alpha P(x_i, beta)) / Z_alpha, shifted like consensus_point.
double violation_gibbs(const ParticleEnsemble& ensemble, const Problem& problem, double beta, double alpha);

// Forms over precomputed per-particle values. These are what the driver loop uses.
double plain_mean(std::span<const double> penalties);
double gibbs_mean(std::span<const double> penalties, std::span<const double> penalized, double alpha);

enum class ControllerMode { IncreaseOnly, DecreaseUntilFirstViolation };

/// How theta is relaxed when the feasibility check fails.
///  ClampAtInitial: theta = min(theta / eta_theta, theta0), so theta never
///    climbs back above theta0 through this branch.
///  CapTolerance: theta = max(theta / eta_theta, theta0), so the tolerance
///    1/sqrt(theta) never grows past its starting value 1/sqrt(theta0).
/// The two agree whenever theta / eta_theta equals theta0. Once theta has
/// grown past theta0, ClampAtInitial snaps it back to theta0 on the first
/// failure, while CapTolerance only divides it by eta_theta.
enum class ThetaRelax { ClampAtInitial, CapTolerance };

struct PenaltyController {
  double beta = 1.0;
  double theta = 1.0;
  double theta0 = 1.0;
  double eta_beta = 1.1;
  double eta_theta = 1.1;
  ControllerMode mode = ControllerMode::IncreaseOnly;
  ThetaRelax relax = ThetaRelax::ClampAtInitial;
  bool has_violated = false;

  /// Validated initial state: beta0 >= 0, theta0 > 0, both factors > 1.
  static PenaltyController make(double beta0, double theta0, double eta_beta, double eta_theta,
                                ControllerMode mode = ControllerMode::IncreaseOnly,
                                ThetaRelax relax = ThetaRelax::ClampAtInitial);

  double tolerance() const noexcept;
  bool accepts(double violation) const noexcept { return violation <= tolerance(); }

  friend bool operator==(const PenaltyController&, const PenaltyController&) = default;
};

/// One controller update.
///  check holds (violation <= 1/sqrt(theta)): theta *= eta_theta, beta kept; in
///    DecreaseUntilFirstViolation mode before the first failure, beta /= eta_beta.
///  check fails: beta *= eta_beta, theta /= eta_theta bounded by theta0 as the
///    ThetaRelax rule says, and has_violated latches.
/// The growth branch is not capped at theta0.
PenaltyController controller_step(const PenaltyController& controller, double violation);

}  // namespace cbo
