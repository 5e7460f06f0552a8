#pragma once

// Particle system of consensus-based optimization: Gibbs-weighted consensus
// point, one Euler-Maruyama step with isotropic or anisotropic exploration,
// and the empirical variance functional.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cbo {

using Point = Eigen::VectorXd;
/// N x d, one particle per row (rows are contiguous).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N particle positions in R^d. Immutable once constructed; N >= 1, d >= 1
/// and every coordinate is finite.
class ParticleEnsemble {
 public:
  explicit ParticleEnsemble(RowMatrix positions);

  std::size_t size() const noexcept { return static_cast<std::size_t>(positions_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(positions_.cols()); }
  const RowMatrix& positions() const noexcept { return positions_; }

  std::span<const double> particle(std::size_t i) const noexcept {
    return {positions_.data() + i * dim(), dim()};
  }

 private:
  RowMatrix positions_;
};

enum class Diffusion { Isotropic, Anisotropic };

struct CboParams {
  double lambda = 1.0;  ///< drift rate towards the consensus point
  double sigma = 1.0;   ///< noise amplitude
  double dt = 0.01;
  double alpha = 1e6;  ///< Gibbs weight exponent
  Diffusion diffusion = Diffusion::Isotropic;

  /// Throws std::invalid_argument unless dt > 0, alpha > 0, lambda >= 0, sigma >= 0.
  void validate() const;

  /// Mean-field decay condition: 2*lambda > d*sigma^2 for isotropic noise,
  /// 2*lambda > sigma^2 for anisotropic noise. Diagnostic only.
  bool satisfies_decay_condition(std::size_t dim) const noexcept;
};

struct ConsensusPoint {
  Point point;
  double log_normalizer = 0.0;  ///< log Z_alpha
};

/// Gibbs-weighted average sum_i x_i exp(-alpha v_i) / Z_alpha, evaluated with
/// the minimum value subtracted inside the exponent. The result is clamped to
/// the componentwise hull of the ensemble, which only ever removes rounding.
ConsensusPoint consensus_point(const ParticleEnsemble& ensemble, std::span<const double> values,
                               double alpha);

/// Same, restricted to the particles listed in `indices`.
ConsensusPoint consensus_point(const ParticleEnsemble& ensemble, std::span<const double> values,
                               double alpha, std::span<const std::size_t> indices);

/// Diagonal of the exploration matrix D for one particle.
Point diffusion_scales(std::span<const double> particle, const Point& consensus, Diffusion kind);

/// Per-particle drift targets. owner[i] indexes into `points`; particles whose
/// owner is kFrozen are copied through unchanged.
struct StepTargets {
  static constexpr std::uint32_t kFrozen = 0xFFFFFFFFu;
  std::vector<Point> points;
  std::vector<std::uint32_t> owner;

  static StepTargets shared(const Point& consensus, std::size_t n);
};

/// x_i - lambda (x_i - x_a) dt + sigma D_i B_i sqrt(dt) for every particle.
/// `noise` holds the N x d standard normal draws B_i. Pure: identical inputs
/// give bit-identical output regardless of `workers`.
ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ensemble, const ConsensusPoint& consensus,
                                     const CboParams& params, const RowMatrix& noise,
                                     std::size_t workers = 1);

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ensemble, const StepTargets& targets,
                                     const CboParams& params, const RowMatrix& noise,
                                     std::size_t workers = 1);

/// (1 / 2N) sum_i |x_i - reference|^2.
double variance_functional(const ParticleEnsemble& ensemble, const Point& reference);

}  // namespace cbo
