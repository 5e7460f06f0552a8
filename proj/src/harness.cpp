#include "cbo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <limits>
#include <string>

#include "cbo/error.hpp"
#include "cbo/parallel.hpp"

namespace cbo {

void BatchSpec::validate(std::size_t n_particles) const {
  if (kind == Kind::RandomSubset) {
    if (size < 1 || size > n_particles) {
      throw std::invalid_argument("random subset batch size must be in [1, N]");
    }
  } else if (size < 1 || n_particles % size != 0) {
    throw std::invalid_argument("partition batch count must divide N");
  }
}

void RunConfig::validate() const {
  params.validate();
  (void)controller.initial();
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be >= 1");
  if (init) init->validate();
  if (batch) batch->validate(n_particles);
}

StepTargets BatchedConsensus::targets() const {
  StepTargets out;
  out.points.reserve(points.size());
  for (const ConsensusPoint& c : points) out.points.push_back(c.point);
  out.owner = owner;
  return out;
}

BatchedConsensus batched_consensus(const ParticleEnsemble& ensemble, std::span<const double> values,
                                   double alpha, const BatchSpec& spec, CounterRng& rng) {
  const std::size_t n = ensemble.size();
  spec.validate(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t shuffled = spec.kind == BatchSpec::Kind::RandomSubset ? spec.size : n;
  for (std::size_t k = 0; k < shuffled && k + 1 < n; ++k) {
    std::swap(order[k], order[k + rng.below(n - k)]);
  }

  BatchedConsensus out;
  if (spec.kind == BatchSpec::Kind::RandomSubset) {
    const std::span<const std::size_t> members(order.data(), spec.size);
    out.points.push_back(consensus_point(ensemble, values, alpha, members));
    if (spec.scope == BatchSpec::UpdateScope::All) {
      out.owner.assign(n, 0);
    } else {
      out.owner.assign(n, StepTargets::kFrozen);
      for (std::size_t i : members) out.owner[i] = 0;
    }
    return out;
  }

  const std::size_t batch_size = n / spec.size;
  out.owner.assign(n, 0);
  for (std::size_t b = 0; b < spec.size; ++b) {
    const std::span<const std::size_t> members(order.data() + b * batch_size, batch_size);
    out.points.push_back(consensus_point(ensemble, values, alpha, members));
    for (std::size_t i : members) out.owner[i] = static_cast<std::uint32_t>(b);
  }
  return out;
}

ParticleEnsemble sample_initial(const InitDistribution& init, std::size_t n, std::size_t dim,
                                std::uint64_t seed, std::size_t workers) {
  init.validate();
  RowMatrix positions(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(seed, Stream::Init, 0, i);
      double* row = positions.data() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] = init.kind == InitDistribution::Kind::UniformBox ? rng.uniform(init.low, init.high)
                                                                  : init.mean + init.stddev * rng.normal();
      }
    }
  });
  return ParticleEnsemble(std::move(positions));
}

RowMatrix sample_noise(std::uint64_t seed, std::size_t k, std::size_t n, std::size_t dim, std::size_t workers) {
  RowMatrix noise(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(seed, Stream::Noise, k, i);
      double* row = noise.data() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) row[j] = rng.normal();
    }
  });
  return noise;
}

namespace {

bool wants_snapshot(const RunConfig& config, std::size_t k) {
  return std::find(config.snapshot_iterations.begin(), config.snapshot_iterations.end(), k) !=
         config.snapshot_iterations.end();
}

}  // namespace

RunTrace run(const Problem& problem, const RunConfig& config) {
  config.validate();
  if (problem.dimension < 1) throw std::invalid_argument("problem dimension must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t d = problem.dimension;
  const std::size_t workers = std::max<std::size_t>(config.workers, 1);
  const double alpha = config.params.alpha;

  RunTrace trace;
  trace.initial_controller = config.controller.initial();
  PenaltyController controller = trace.initial_controller;
  trace.records.reserve(config.n_iterations);

  ParticleEnsemble ensemble =
      sample_initial(config.init.value_or(problem.init), config.n_particles, d, config.seed, workers);
  if (wants_snapshot(config, 0)) trace.snapshots.push_back({0, ensemble});
  if (problem.known_solution) trace.initial_variance = variance_functional(ensemble, *problem.known_solution);

  try {
    EnsembleValues values = evaluate(problem, ensemble, workers);
    trace.final_consensus = consensus_point(ensemble, values.penalized(controller.beta), alpha).point;

    for (std::size_t k = 1; k <= config.n_iterations; ++k) {
      const std::vector<double> penalized = values.penalized(controller.beta);
      IterationRecord record;
      StepTargets targets;
      if (config.batch) {
        CounterRng batch_rng(config.seed, Stream::Batch, k, 0);
        const BatchedConsensus batched = batched_consensus(ensemble, penalized, alpha, *config.batch, batch_rng);
        targets = batched.targets();
        record.consensus = batched.points.size() == 1 ? batched.points.front().point
                                                      : consensus_point(ensemble, penalized, alpha).point;
      } else {
        const ConsensusPoint consensus = consensus_point(ensemble, penalized, alpha);
        targets = StepTargets::shared(consensus.point, ensemble.size());
        record.consensus = consensus.point;
      }

      const RowMatrix noise = sample_noise(config.seed, k, ensemble.size(), d, workers);
      ensemble = euler_maruyama_step(ensemble, targets, config.params, noise, workers);
      values = evaluate(problem, ensemble, workers);

      const double violation = config.check == FeasibilityCheck::PlainMean
                                   ? plain_mean(values.penalty)
                                   : gibbs_mean(values.penalty, values.penalized(controller.beta), alpha);
      record.k = k;
      record.t = static_cast<double>(k) * config.params.dt;
      record.beta = controller.beta;
      record.theta = controller.theta;
      record.violation = violation;
      record.tolerance = controller.tolerance();
      record.passed = controller.accepts(violation);
      if (problem.known_solution) record.variance = variance_functional(ensemble, *problem.known_solution);
      trace.records.push_back(std::move(record));

      controller = controller_step(controller, violation);
      if (wants_snapshot(config, k)) trace.snapshots.push_back({k, ensemble});
    }
    trace.final_consensus = consensus_point(ensemble, values.penalized(controller.beta), alpha).point;
  } catch (const NumericalError& e) {
    trace.aborted = true;
    trace.abort_reason = e.what();
    if (!trace.records.empty()) trace.final_consensus = trace.records.back().consensus;
  }

  trace.final_controller = controller;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

bool success_check(const Point& final_consensus, const Point& x_star, double tol_inf) {
  if (final_consensus.size() != x_star.size()) throw std::invalid_argument("success_check: dimension mismatch");
  if (!(tol_inf > 0.0)) throw std::invalid_argument("success_check: tolerance must be > 0");
  return (final_consensus - x_star).lpNorm<Eigen::Infinity>() <= tol_inf;
}

RunOutcome evaluate_outcome(const Problem& problem, const RunTrace& trace, std::uint64_t seed, double tol_inf) {
  if (!problem.known_solution) {
    throw std::invalid_argument("problem '" + problem.name + "' has no known solution");
  }
  RunOutcome outcome;
  outcome.seed = seed;
  outcome.aborted = trace.aborted;
  outcome.abort_reason = trace.abort_reason;
  outcome.final_beta = trace.final_controller.beta;
  outcome.final_consensus = trace.final_consensus;
  if (trace.final_consensus.size() == problem.known_solution->size()) {
    outcome.error_inf = (trace.final_consensus - *problem.known_solution).lpNorm<Eigen::Infinity>();
    outcome.success = !trace.aborted && success_check(trace.final_consensus, *problem.known_solution, tol_inf);
  } else {
    outcome.error_inf = std::numeric_limits<double>::infinity();
  }
  return outcome;
}

SuccessReport success_rate(const Problem& problem, const RunConfig& config, std::size_t n_runs, double tol_inf,
                           std::size_t workers) {
  if (n_runs < 1) throw std::invalid_argument("success_rate: n_runs must be >= 1");
  if (!(tol_inf > 0.0)) throw std::invalid_argument("success_rate: tolerance must be > 0");
  if (!problem.known_solution) {
    throw std::invalid_argument("problem '" + problem.name + "' has no known solution");
  }
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  SuccessReport report;
  report.outcomes.resize(n_runs);
  parallel_for(n_runs, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RunConfig local = config;
      local.seed = config.seed + r;
      if (workers > 1) local.workers = 1;
      local.snapshot_iterations.clear();
      report.outcomes[r] = evaluate_outcome(problem, run(problem, local), local.seed, tol_inf);
    }
  });
  for (const RunOutcome& o : report.outcomes) {
    report.successes += o.success ? 1 : 0;
    report.aborted += o.aborted ? 1 : 0;
  }
  report.rate = static_cast<double>(report.successes) / static_cast<double>(n_runs);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cbo
