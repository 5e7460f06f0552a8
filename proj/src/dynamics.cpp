#include "cbo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cbo/error.hpp"
#include "cbo/parallel.hpp"

namespace cbo {

ParticleEnsemble::ParticleEnsemble(RowMatrix positions) : positions_(std::move(positions)) {
  if (positions_.rows() < 1 || positions_.cols() < 1) {
    throw std::invalid_argument("particle ensemble needs at least one particle of dimension >= 1");
  }
  const double* data = positions_.data();
  const std::size_t total = static_cast<std::size_t>(positions_.size());
  for (std::size_t k = 0; k < total; ++k) {
    if (!std::isfinite(data[k])) {
      const std::size_t i = k / dim();
      throw NumericalError("non-finite coordinate in particle " + std::to_string(i), i);
    }
  }
}

void CboParams::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
}

bool CboParams::satisfies_decay_condition(std::size_t dim) const noexcept {
  const double effective_dim = diffusion == Diffusion::Isotropic ? static_cast<double>(dim) : 1.0;
  return 2.0 * lambda > effective_dim * sigma * sigma;
}

namespace {

template <class IndexAt>
ConsensusPoint weighted_average(const ParticleEnsemble& ensemble, std::span<const double> values,
                                double alpha, std::size_t count, IndexAt index_at) {
  if (values.size() != ensemble.size()) {
    throw std::invalid_argument("consensus_point: expected " + std::to_string(ensemble.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  if (count == 0) throw std::invalid_argument("consensus_point: empty particle set");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("consensus_point: alpha must be finite and >= 0");
  }

  double min_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = index_at(k);
    if (!std::isfinite(values[i])) {
      throw NumericalError("consensus_point: non-finite value for particle " + std::to_string(i), i);
    }
    min_value = std::min(min_value, values[i]);
  }

  const std::size_t d = ensemble.dim();
  Point numerator = Point::Zero(static_cast<Eigen::Index>(d));
  Point lo = Point::Constant(static_cast<Eigen::Index>(d), std::numeric_limits<double>::infinity());
  Point hi = -lo;
  double normalizer = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = index_at(k);
    const auto x = ensemble.particle(i);
    const double w = std::exp(-alpha * (values[i] - min_value));
    normalizer += w;
    for (std::size_t j = 0; j < d; ++j) {
      numerator[j] += w * x[j];
      lo[j] = std::min(lo[j], x[j]);
      hi[j] = std::max(hi[j], x[j]);
    }
  }
  // normalizer >= 1: the minimising particle contributes exp(0).
  ConsensusPoint out;
  out.point = (numerator / normalizer).cwiseMax(lo).cwiseMin(hi);
  out.log_normalizer = std::log(normalizer) - alpha * min_value;
  return out;
}

}  // namespace

ConsensusPoint consensus_point(const ParticleEnsemble& ensemble, std::span<const double> values,
                               double alpha) {
  return weighted_average(ensemble, values, alpha, ensemble.size(), [](std::size_t k) { return k; });
}

ConsensusPoint consensus_point(const ParticleEnsemble& ensemble, std::span<const double> values,
                               double alpha, std::span<const std::size_t> indices) {
  for (std::size_t i : indices) {
    if (i >= ensemble.size()) throw std::out_of_range("consensus_point: particle index out of range");
  }
  return weighted_average(ensemble, values, alpha, indices.size(),
                          [indices](std::size_t k) { return indices[k]; });
}

Point diffusion_scales(std::span<const double> particle, const Point& consensus, Diffusion kind) {
  const std::size_t d = particle.size();
  if (static_cast<std::size_t>(consensus.size()) != d) {
    throw std::invalid_argument("diffusion_scales: particle has dimension " + std::to_string(d) +
                                ", consensus has " + std::to_string(consensus.size()));
  }
  Point scales(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) scales[j] = std::abs(particle[j] - consensus[j]);
  if (kind == Diffusion::Isotropic) scales.setConstant(scales.norm());
  return scales;
}

StepTargets StepTargets::shared(const Point& consensus, std::size_t n) {
  StepTargets targets;
  targets.points.push_back(consensus);
  targets.owner.assign(n, 0);
  return targets;
}

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ensemble, const ConsensusPoint& consensus,
                                     const CboParams& params, const RowMatrix& noise,
                                     std::size_t workers) {
  return euler_maruyama_step(ensemble, StepTargets::shared(consensus.point, ensemble.size()), params,
                             noise, workers);
}

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ensemble, const StepTargets& targets,
                                     const CboParams& params, const RowMatrix& noise,
                                     std::size_t workers) {
  params.validate();
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  if (static_cast<std::size_t>(noise.rows()) != n || static_cast<std::size_t>(noise.cols()) != d) {
    throw std::invalid_argument("euler_maruyama_step: noise must be " + std::to_string(n) + " x " +
                                std::to_string(d));
  }
  if (targets.owner.size() != n) {
    throw std::invalid_argument("euler_maruyama_step: target assignment size mismatch");
  }
  for (const Point& p : targets.points) {
    if (static_cast<std::size_t>(p.size()) != d) {
      throw std::invalid_argument("euler_maruyama_step: consensus dimension mismatch");
    }
  }
  for (std::uint32_t owner : targets.owner) {
    if (owner != StepTargets::kFrozen && owner >= targets.points.size()) {
      throw std::out_of_range("euler_maruyama_step: target index out of range");
    }
  }

  const double drift = params.lambda * params.dt;
  const double noise_scale = params.sigma * std::sqrt(params.dt);
  const bool isotropic = params.diffusion == Diffusion::Isotropic;
  RowMatrix next = ensemble.positions();

  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t owner = targets.owner[i];
      if (owner == StepTargets::kFrozen) continue;
      const Point& target = targets.points[owner];
      const double* x = ensemble.positions().data() + i * d;
      const double* b = noise.data() + i * d;
      double* out = next.data() + i * d;
      double norm_sq = 0.0;
      if (isotropic) {
        for (std::size_t j = 0; j < d; ++j) norm_sq += (x[j] - target[j]) * (x[j] - target[j]);
      }
      const double iso_scale = std::sqrt(norm_sq);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - target[j];
        const double scale = isotropic ? iso_scale : std::abs(diff);
        out[j] = x[j] - drift * diff + noise_scale * scale * b[j];
      }
    }
  });

  // Sequential scan so the reported index does not depend on scheduling.
  const double* data = next.data();
  for (std::size_t k = 0; k < n * d; ++k) {
    if (!std::isfinite(data[k])) {
      const std::size_t i = k / d;
      throw NumericalError("euler_maruyama_step: particle " + std::to_string(i) + " became non-finite", i,
                           std::vector<double>(ensemble.particle(i).begin(), ensemble.particle(i).end()));
    }
  }
  return ParticleEnsemble(std::move(next));
}

double variance_functional(const ParticleEnsemble& ensemble, const Point& reference) {
  const std::size_t d = ensemble.dim();
  if (static_cast<std::size_t>(reference.size()) != d) {
    throw std::invalid_argument("variance_functional: reference dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto x = ensemble.particle(i);
    for (std::size_t j = 0; j < d; ++j) total += (x[j] - reference[j]) * (x[j] - reference[j]);
  }
  return total / (2.0 * static_cast<double>(ensemble.size()));
}

}  // namespace cbo
