#pragma once

// Driver loop of penalized CBO with adaptive penalty parameter, random batch
// variants, success metrics and multi-run statistics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbo/dynamics.hpp"
#include "cbo/penalty.hpp"
#include "cbo/problem.hpp"
#include "cbo/rng.hpp"

namespace cbo {

struct ControllerSettings {
  double beta0 = 1.0;
  double theta0 = 4.0;
  double eta_beta = 1.1;
  double eta_theta = 1.1;
  ControllerMode mode = ControllerMode::IncreaseOnly;
  ThetaRelax relax = ThetaRelax::ClampAtInitial;

  PenaltyController initial() const {
    return PenaltyController::make(beta0, theta0, eta_beta, eta_theta, mode, relax);
  }
};

/// Random batch variants of the consensus computation.
///  RandomSubset: `size` = M particles drawn without replacement each
///    iteration; the consensus uses only them. With UpdateScope::Batch only
///    those M particles move.
///  Partition: the particles are shuffled into `size` = S batches of N/S each,
///    and every batch relaxes towards its own consensus point.
struct BatchSpec {
  enum class Kind { RandomSubset, Partition };
  enum class UpdateScope { All, Batch };
  Kind kind = Kind::RandomSubset;
  std::size_t size = 1;
  UpdateScope scope = UpdateScope::All;

  void validate(std::size_t n_particles) const;
};

struct RunConfig {
  CboParams params;
  ControllerSettings controller;
  FeasibilityCheck check = FeasibilityCheck::GibbsWeighted;
  std::size_t n_particles = 100;
  std::size_t n_iterations = 100;
  std::optional<InitDistribution> init;  ///< defaults to the problem's
  std::uint64_t seed = 0;
  std::optional<BatchSpec> batch;
  std::size_t workers = 1;
  std::vector<std::size_t> snapshot_iterations;  ///< 0 = initial ensemble

  void validate() const;
};

struct IterationRecord {
  std::size_t k = 0;
  double t = 0.0;
  double beta = 0.0;   ///< beta used in iteration k
  double theta = 0.0;  ///< theta the check compared against
  double violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  Point consensus;  ///< X_alpha computed from the previous iterate
  std::optional<double> variance;
};

struct Snapshot {
  std::size_t k;
  ParticleEnsemble ensemble;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  Point final_consensus;
  PenaltyController initial_controller;
  PenaltyController final_controller;
  std::optional<double> initial_variance;
  std::vector<Snapshot> snapshots;
  double wall_seconds = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

/// Consensus points for one iteration under a batch spec, plus the
/// particle-to-point assignment used by the step.
struct BatchedConsensus {
  std::vector<ConsensusPoint> points;
  std::vector<std::uint32_t> owner;  ///< StepTargets::kFrozen for particles that stay put

  StepTargets targets() const;
};

BatchedConsensus batched_consensus(const ParticleEnsemble& ensemble, std::span<const double> values,
                                   double alpha, const BatchSpec& spec, CounterRng& rng);

/// Initial particles drawn from substream (seed, Init, 0, i).
ParticleEnsemble sample_initial(const InitDistribution& init, std::size_t n, std::size_t dim,
                                std::uint64_t seed, std::size_t workers = 1);

/// Standard normal N x d draws from substreams (seed, Noise, k, i).
RowMatrix sample_noise(std::uint64_t seed, std::size_t k, std::size_t n, std::size_t dim,
                       std::size_t workers = 1);

/// Runs exactly n_iterations iterations. A numerical blow-up stops the run
/// early with `aborted` set and the records up to the failure.
RunTrace run(const Problem& problem, const RunConfig& config);

/// |final - x_star|_inf <= tol.
bool success_check(const Point& final_consensus, const Point& x_star, double tol_inf);

struct RunOutcome {
  std::uint64_t seed = 0;
  bool success = false;
  bool aborted = false;
  double final_beta = 0.0;
  double error_inf = 0.0;
  Point final_consensus;
  std::string abort_reason;
};

struct SuccessReport {
  double rate = 0.0;
  std::size_t successes = 0;
  std::size_t aborted = 0;
  std::vector<RunOutcome> outcomes;
  double wall_seconds = 0.0;
};

RunOutcome evaluate_outcome(const Problem& problem, const RunTrace& trace, std::uint64_t seed, double tol_inf);

/// Runs seeds config.seed .. config.seed + n_runs - 1, `workers` runs at a
/// time (each run single-threaded). Aborted runs count as failures.
SuccessReport success_rate(const Problem& problem, const RunConfig& config, std::size_t n_runs,
                           double tol_inf, std::size_t workers = 1);

}  // namespace cbo
