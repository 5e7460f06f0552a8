#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "cbo/problems.hpp"
#include "cbo/rng.hpp"

namespace cbo {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double QpInstance::objective(std::span<const double> x) const {
  const Eigen::Map<const VectorXd> v(x.data(), static_cast<Index>(x.size()));
  return 0.5 * v.dot(A * v) - b.dot(v);
}

double QpInstance::penalty(std::span<const double> x) const {
  const Eigen::Map<const VectorXd> v(x.data(), static_cast<Index>(x.size()));
  const double equality = (H.transpose() * v + h0).lpNorm<1>();
  const double bounds = (-v).cwiseMax(0.0).sum();
  return equality + bounds;
}

double QpInstance::kkt_residual() const {
  double worst = (A - A.transpose()).cwiseAbs().maxCoeff();
  worst = std::max(worst, (H.transpose() * x_star + h0).cwiseAbs().maxCoeff());
  worst = std::max(worst, (-x_star).cwiseMax(0.0).maxCoeff());
  worst = std::max(worst, (-bound_multipliers).cwiseMax(0.0).maxCoeff());
  worst = std::max(worst, bound_multipliers.cwiseProduct(x_star).cwiseAbs().maxCoeff());
  worst = std::max(worst, (A * x_star - b + H * multipliers - bound_multipliers).cwiseAbs().maxCoeff());
  return worst;
}

QpInstance make_random_qp_instance(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("random QP needs dimension >= 2");
  const Index d = static_cast<Index>(dim);
  const Index p = d / 2;
  const Index n_active = (d + 3) / 4;
  CounterRng rng(seed, Stream::ProblemGen, 0, dim);

  QpInstance qp;
  MatrixXd B(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) B(i, j) = rng.normal();
  qp.A = B * B.transpose() / static_cast<double>(d) + MatrixXd::Identity(d, d);
  qp.A = 0.5 * (qp.A + qp.A.transpose()).eval();

  qp.H.resize(d, p);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < p; ++j) qp.H(i, j) = rng.normal();

  qp.x_star.resize(d);
  for (Index i = 0; i < d; ++i) qp.x_star[i] = rng.uniform(0.0, 2.0);

  // Partial Fisher-Yates: the first n_active entries of `order` are the active bounds.
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index k = 0; k < n_active; ++k) {
    const Index pick = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - k)));
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
  }

  qp.multipliers.resize(p);
  for (Index j = 0; j < p; ++j) qp.multipliers[j] = rng.uniform(-0.9, 0.9);

  qp.bound_multipliers = VectorXd::Zero(d);
  for (Index k = 0; k < n_active; ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    qp.x_star[i] = 0.0;
    qp.bound_multipliers[i] = rng.uniform();
  }

  qp.b = qp.A * qp.x_star + qp.H * qp.multipliers - qp.bound_multipliers;
  qp.h0 = -qp.H.transpose() * qp.x_star;
  return qp;
}

Problem make_qp_problem(const QpInstance& instance) {
  auto shared = std::make_shared<const QpInstance>(instance);
  Problem p;
  p.name = "qp";
  p.dimension = instance.dim();
  p.objective = [shared](std::span<const double> x) { return shared->objective(x); };
  p.penalty = [shared](std::span<const double> x) { return shared->penalty(x); };
  p.known_solution = instance.x_star;
  p.init = InitDistribution::uniform(-2.0, 2.0);
  return p;
}

std::pair<Problem, QpInstance> make_random_qp(std::size_t dim, std::uint64_t seed) {
  QpInstance instance = make_random_qp_instance(dim, seed);
  Problem problem = make_qp_problem(instance);
  return {std::move(problem), std::move(instance)};
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

MatrixXd matrix_from(const nlohmann::json& j, const char* field, Index rows, Index cols) {
  const auto& rows_json = j.at(field);
  if (!rows_json.is_array() || static_cast<Index>(rows_json.size()) != rows) {
    throw std::invalid_argument(std::string("qp json: '") + field + "' must have " + std::to_string(rows) + " rows");
  }
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = rows_json[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string("qp json: '") + field + "' rows must have " + std::to_string(cols) +
                                  " entries");
    }
    for (Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

VectorXd vector_from(const nlohmann::json& j, const char* field, Index size) {
  const auto values = j.at(field).get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != size) {
    throw std::invalid_argument(std::string("qp json: '") + field + "' must have " + std::to_string(size) +
                                " entries");
  }
  return Eigen::Map<const VectorXd>(values.data(), size);
}

}  // namespace

std::string qp_to_json(const QpInstance& instance) {
  nlohmann::json j;
  j["dimension"] = instance.dim();
  j["constraints"] = instance.H.cols();
  j["A"] = matrix_json(instance.A);
  j["b"] = vector_json(instance.b);
  j["H"] = matrix_json(instance.H);
  j["h0"] = vector_json(instance.h0);
  j["x_star"] = vector_json(instance.x_star);
  j["multipliers"] = vector_json(instance.multipliers);
  j["bound_multipliers"] = vector_json(instance.bound_multipliers);
  // max_digits10 round-trips every double exactly.
  return j.dump(2);
}

QpInstance qp_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    const Index d = j.at("dimension").get<Index>();
    const Index p = j.at("constraints").get<Index>();
    if (d < 1 || p < 0) throw std::invalid_argument("qp json: bad dimension");
    QpInstance qp;
    qp.A = matrix_from(j, "A", d, d);
    qp.b = vector_from(j, "b", d);
    qp.H = matrix_from(j, "H", d, p);
    qp.h0 = vector_from(j, "h0", p);
    qp.x_star = vector_from(j, "x_star", d);
    qp.multipliers = vector_from(j, "multipliers", p);
    qp.bound_multipliers = vector_from(j, "bound_multipliers", d);
    return qp;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("qp json: ") + e.what());
  }
}

}  // namespace cbo
