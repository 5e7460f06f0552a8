#include "cbo/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cbo/error.hpp"
#include "cbo/parallel.hpp"

namespace cbo {

namespace {

std::vector<double> to_vector(std::span<const double> x) { return {x.begin(), x.end()}; }

void evaluate_one(const Problem& problem, std::span<const double> x, std::size_t index, double& j,
                  double& r) {
  j = problem.objective(x);
  if (!std::isfinite(j)) throw NumericalError("non-finite objective value", index, to_vector(x));
  r = problem.penalty(x);
  if (!std::isfinite(r)) throw NumericalError("non-finite penalty value", index, to_vector(x));
}

}  // namespace

double penalty_value(const Problem& problem, std::span<const double> x, double beta) {
  double j = 0.0;
  double r = 0.0;
  evaluate_one(problem, x, NumericalError::kNoIndex, j, r);
  return j + beta * r;
}

std::vector<double> EnsembleValues::penalized(double beta) const {
  std::vector<double> out(objective.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = objective[i] + beta * penalty[i];
  return out;
}

EnsembleValues evaluate(const Problem& problem, const ParticleEnsemble& ensemble, std::size_t workers) {
  if (ensemble.dim() != problem.dimension) {
    throw std::invalid_argument("problem '" + problem.name + "' has dimension " +
                                std::to_string(problem.dimension) + ", ensemble has " +
                                std::to_string(ensemble.dim()));
  }
  const std::size_t n = ensemble.size();
  EnsembleValues values{std::vector<double>(n), std::vector<double>(n)};
  // Per-chunk failures are collected and the lowest index is reported.
  std::vector<char> failed(n, 0);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = ensemble.particle(i);
      values.objective[i] = problem.objective(x);
      values.penalty[i] = problem.penalty(x);
      failed[i] = !std::isfinite(values.objective[i]) || !std::isfinite(values.penalty[i]);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      double j = 0.0;
      double r = 0.0;
      evaluate_one(problem, ensemble.particle(i), i, j, r);
    }
  }
  return values;
}

double plain_mean(std::span<const double> penalties) {
  if (penalties.empty()) throw std::invalid_argument("violation: empty ensemble");
  double total = 0.0;
  for (double r : penalties) total += r;
  return total / static_cast<double>(penalties.size());
}

double gibbs_mean(std::span<const double> penalties, std::span<const double> penalized, double alpha) {
  if (penalties.empty()) throw std::invalid_argument("violation: empty ensemble");
  if (penalties.size() != penalized.size()) {
    throw std::invalid_argument("violation: penalty and penalized value counts differ");
  }
  double min_value = std::numeric_limits<double>::infinity();
  for (double p : penalized) {
    if (!std::isfinite(p)) throw NumericalError("violation: non-finite penalized value", NumericalError::kNoIndex);
    min_value = std::min(min_value, p);
  }
  double total = 0.0;
  double normalizer = 0.0;
  for (std::size_t i = 0; i < penalties.size(); ++i) {
    const double w = std::exp(-alpha * (penalized[i] - min_value));
    total += penalties[i] * w;
    normalizer += w;
  }
  return total / normalizer;
}

double violation_plain_mean(const ParticleEnsemble& ensemble, const Problem& problem) {
  return plain_mean(evaluate(problem, ensemble).penalty);
}

double violation_gibbs(const ParticleEnsemble& ensemble, const Problem& problem, double beta, double alpha) {
  const EnsembleValues values = evaluate(problem, ensemble);
  return gibbs_mean(values.penalty, values.penalized(beta), alpha);
}

PenaltyController PenaltyController::make(double beta0, double theta0, double eta_beta, double eta_theta,
                                          ControllerMode mode, ThetaRelax relax) {
  if (!(beta0 >= 0.0) || !std::isfinite(beta0)) throw std::invalid_argument("beta0 must be finite and >= 0");
  if (!(theta0 > 0.0) || !std::isfinite(theta0)) throw std::invalid_argument("theta0 must be finite and > 0");
  if (!(eta_beta > 1.0)) throw std::invalid_argument("eta_beta must be > 1");
  if (!(eta_theta > 1.0)) throw std::invalid_argument("eta_theta must be > 1");
  return PenaltyController{beta0, theta0, theta0, eta_beta, eta_theta, mode, relax, false};
}

double PenaltyController::tolerance() const noexcept { return 1.0 / std::sqrt(theta); }

PenaltyController controller_step(const PenaltyController& controller, double violation) {
  if (!std::isfinite(violation)) throw std::invalid_argument("controller_step: violation must be finite");
  PenaltyController next = controller;
  if (controller.accepts(violation)) {
    next.theta = controller.eta_theta * controller.theta;
    if (controller.mode == ControllerMode::DecreaseUntilFirstViolation && !controller.has_violated) {
      next.beta = controller.beta / controller.eta_beta;
    }
  } else {
    next.beta = controller.eta_beta * controller.beta;
    const double relaxed = controller.theta / controller.eta_theta;
    next.theta = controller.relax == ThetaRelax::CapTolerance ? std::max(relaxed, controller.theta0)
                                                              : std::min(relaxed, controller.theta0);
    next.has_violated = true;
  }
  return next;
}

}  // namespace cbo
