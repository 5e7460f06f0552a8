#include "cbo/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cbo/problems.hpp"
#include "cbo/trace_io.hpp"

namespace cbo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- enum <-> text -------------------------------------------------------

template <typename E>
struct Names {
  std::vector<std::pair<E, std::string>> entries;

  const std::string& name(E value) const {
    for (const auto& [e, s] : entries)
      if (e == value) return s;
    throw std::logic_error("unnamed enum value");
  }

  E parse(const std::string& text, const std::string& field) const {
    for (const auto& [e, s] : entries)
      if (s == text) return e;
    std::string allowed;
    for (const auto& [e, s] : entries) allowed += (allowed.empty() ? "" : ", ") + s;
    throw SpecError("field '" + field + "': unknown value '" + text + "' (expected one of " + allowed + ")");
  }
};

const Names<Diffusion> kDiffusion{{{Diffusion::Isotropic, "isotropic"}, {Diffusion::Anisotropic, "anisotropic"}}};
const Names<FeasibilityCheck> kCheck{
    {{FeasibilityCheck::GibbsWeighted, "gibbs"}, {FeasibilityCheck::PlainMean, "plain-mean"}}};
const Names<ControllerMode> kMode{{{ControllerMode::IncreaseOnly, "increase-only"},
                                   {ControllerMode::DecreaseUntilFirstViolation, "decrease-until-violation"}}};
const Names<ThetaRelax> kRelax{
    {{ThetaRelax::ClampAtInitial, "clamp-at-initial"}, {ThetaRelax::CapTolerance, "cap-tolerance"}}};
const Names<InitDistribution::Kind> kInit{
    {{InitDistribution::Kind::UniformBox, "uniform"}, {InitDistribution::Kind::Gaussian, "gaussian"}}};
const Names<BatchSpec::Kind> kBatch{
    {{BatchSpec::Kind::RandomSubset, "subset"}, {BatchSpec::Kind::Partition, "partition"}}};
const Names<BatchSpec::UpdateScope> kScope{
    {{BatchSpec::UpdateScope::All, "all"}, {BatchSpec::UpdateScope::Batch, "batch"}}};

// ---- strict object reader ------------------------------------------------

// Wraps one JSON object, remembers which keys were consumed and rejects the
// rest in finish(), so that a misspelt field is an error instead of a silent
// default.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw SpecError("field '" + label() + "' must be an object");
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return object_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw SpecError("field '" + field(key) + "' must be a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      throw SpecError("field '" + field(key) + "' must be a non-negative integer");
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && std::floor(d) == d && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw SpecError("field '" + field(key) + "' must be a non-negative integer");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw SpecError("field '" + field(key) + "' must be a string");
    return v.get<std::string>();
  }

  template <typename E>
  E choice(const std::string& key, E fallback, const Names<E>& names) {
    if (!has(key)) return fallback;
    return names.parse(text(key, ""), field(key));
  }

  const json& array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw SpecError("field '" + field(key) + "' must be an array");
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!used_.count(key)) throw SpecError("unknown field '" + field(key) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

std::size_t as_count(std::uint64_t v) { return static_cast<std::size_t>(v); }

ProblemSelector parse_problem(const json& j) {
  ProblemSelector p;
  if (j.is_string()) {
    p.name = j.get<std::string>();
    return p;
  }
  ObjectReader r(j, "problem");
  if (!r.has("name")) throw SpecError("field 'problem.name' is required");
  p.name = r.text("name", "");
  p.dimension = as_count(r.unsigned_int("dimension", p.dimension));
  p.seed = r.unsigned_int("seed", p.seed);
  p.file = r.text("file", "");
  r.finish();
  return p;
}

InitDistribution parse_init(const json& j) {
  ObjectReader r(j, "init");
  InitDistribution init;
  init.kind = r.choice("kind", InitDistribution::Kind::UniformBox, kInit);
  init.low = r.number("low", init.low);
  init.high = r.number("high", init.high);
  init.mean = r.number("mean", init.mean);
  init.stddev = r.number("stddev", init.stddev);
  r.finish();
  return init;
}

BatchSpec parse_batch(const json& j) {
  ObjectReader r(j, "batch");
  BatchSpec b;
  b.kind = r.choice("kind", b.kind, kBatch);
  b.size = as_count(r.unsigned_int("size", b.size));
  b.scope = r.choice("scope", b.scope, kScope);
  r.finish();
  return b;
}

template <typename T, typename F>
std::vector<T> parse_list(ObjectReader& r, const std::string& key, F&& convert) {
  std::vector<T> out;
  if (!r.has(key)) return out;
  const json& a = r.array(key);
  if (a.empty()) throw SpecError("field '" + r.field(key) + "' must not be empty");
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(convert(a[i], r.field(key) + "[" + std::to_string(i) + "]"));
  return out;
}

double json_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SpecError("field '" + field + "' must be a number");
  return v.get<double>();
}

std::string json_text(const json& v, const std::string& field) {
  if (!v.is_string()) throw SpecError("field '" + field + "' must be a string");
  return v.get<std::string>();
}

SweepAxes parse_sweep(const json& j) {
  ObjectReader r(j, "sweep");
  SweepAxes s;
  s.beta0 = parse_list<double>(r, "beta0", json_number);
  s.sigma = parse_list<double>(r, "sigma", json_number);
  s.problem = parse_list<std::string>(r, "problem", json_text);
  s.dimension = parse_list<std::size_t>(r, "dimension", [](const json& v, const std::string& field) {
    if (!v.is_number_unsigned()) throw SpecError("field '" + field + "' must be a positive integer");
    return v.get<std::size_t>();
  });
  s.diffusion = parse_list<Diffusion>(
      r, "diffusion", [](const json& v, const std::string& f) { return kDiffusion.parse(json_text(v, f), f); });
  s.check = parse_list<FeasibilityCheck>(
      r, "check", [](const json& v, const std::string& f) { return kCheck.parse(json_text(v, f), f); });
  s.mode = parse_list<ControllerMode>(
      r, "mode", [](const json& v, const std::string& f) { return kMode.parse(json_text(v, f), f); });
  r.finish();
  return s;
}

// ---- echo ----------------------------------------------------------------

json init_to_json(const InitDistribution& init) {
  if (init.kind == InitDistribution::Kind::UniformBox) {
    return {{"kind", kInit.name(init.kind)}, {"low", init.low}, {"high", init.high}};
  }
  return {{"kind", kInit.name(init.kind)}, {"mean", init.mean}, {"stddev", init.stddev}};
}

json spec_json(const ExperimentSpec& s) {
  const RunConfig& c = s.config;
  json problem = {{"name", s.problem.name}};
  if (s.problem.name == "qp") {
    problem["dimension"] = s.problem.dimension;
    problem["seed"] = s.problem.seed;
    if (!s.problem.file.empty()) problem["file"] = s.problem.file;
  }
  json j = {
      {"problem", problem},
      {"params",
       {{"lambda", c.params.lambda},
        {"sigma", c.params.sigma},
        {"dt", c.params.dt},
        {"alpha", c.params.alpha},
        {"diffusion", kDiffusion.name(c.params.diffusion)}}},
      {"controller",
       {{"beta0", c.controller.beta0},
        {"theta0", c.controller.theta0},
        {"eta_beta", c.controller.eta_beta},
        {"eta_theta", c.controller.eta_theta},
        {"mode", kMode.name(c.controller.mode)},
        {"relax", kRelax.name(c.controller.relax)}}},
      {"check", kCheck.name(c.check)},
      {"particles", c.n_particles},
      {"iterations", c.n_iterations},
      {"seed", c.seed},
      {"threads", c.workers},
      {"runs", s.runs},
      {"tolerance", s.tolerance},
      {"output", s.output},
  };
  if (c.init) j["init"] = init_to_json(*c.init);
  if (c.batch) {
    j["batch"] = {{"kind", kBatch.name(c.batch->kind)},
                  {"size", c.batch->size},
                  {"scope", kScope.name(c.batch->scope)}};
  }
  if (!c.snapshot_iterations.empty()) j["snapshots"] = c.snapshot_iterations;
  if (!s.note.empty()) j["note"] = s.note;
  if (!s.sweep.empty()) {
    json sw = json::object();
    const SweepAxes& a = s.sweep;
    if (!a.beta0.empty()) sw["beta0"] = a.beta0;
    if (!a.sigma.empty()) sw["sigma"] = a.sigma;
    if (!a.problem.empty()) sw["problem"] = a.problem;
    if (!a.dimension.empty()) sw["dimension"] = a.dimension;
    auto names = [](const auto& values, const auto& table) {
      json out = json::array();
      for (auto v : values) out.push_back(table.name(v));
      return out;
    };
    if (!a.diffusion.empty()) sw["diffusion"] = names(a.diffusion, kDiffusion);
    if (!a.check.empty()) sw["check"] = names(a.check, kCheck);
    if (!a.mode.empty()) sw["mode"] = names(a.mode, kMode);
    j["sweep"] = sw;
  }
  return j;
}

// ---- output helpers ------------------------------------------------------

fs::path prepare_directory(const std::string& dir) {
  const fs::path path(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) {
    throw IoError("cannot create output directory '" + path.string() + "'" + (ec ? ": " + ec.message() : ""));
  }
  return path;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
  close_output(out, path);
}

json point_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

std::string format_value(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

RunTrace run_checked(const Problem& problem, const RunConfig& config) {
  try {
    return run(problem, config);
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }
}

// ---- sweep ---------------------------------------------------------------

struct TableKey {
  std::string problem;
  std::size_t dimension;
  Diffusion diffusion;
  FeasibilityCheck check;
  ControllerMode mode;
};

struct SweepRow {
  TableKey table;
  double beta0;
  double sigma;
  SuccessReport report;
  std::optional<double> beta_bar;
};

std::string table_file_name(const SweepAxes& axes, const TableKey& key) {
  std::string name = "table";
  if (!axes.problem.empty()) name += "_problem-" + key.problem;
  if (!axes.dimension.empty()) name += "_dimension-" + std::to_string(key.dimension);
  if (!axes.diffusion.empty()) name += "_diffusion-" + kDiffusion.name(key.diffusion);
  if (!axes.check.empty()) name += "_check-" + kCheck.name(key.check);
  if (!axes.mode.empty()) name += "_mode-" + kMode.name(key.mode);
  return name + ".csv";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_final_beta(const SuccessReport& r) {
  double total = 0.0;
  for (const RunOutcome& o : r.outcomes) total += o.final_beta;
  return total / static_cast<double>(r.outcomes.size());
}

std::vector<double> final_betas(const SuccessReport& r) {
  std::vector<double> out;
  for (const RunOutcome& o : r.outcomes) out.push_back(o.final_beta);
  return out;
}

const char* kSweepHeader =
    "problem,dimension,diffusion,check,mode,beta0,sigma,runs,successes,aborted,rate,"
    "mean_final_beta,median_final_beta,beta_bar";

void write_sweep_row(std::ostream& out, const SweepRow& row) {
  const SuccessReport& r = row.report;
  out << row.table.problem << ',' << row.table.dimension << ',' << kDiffusion.name(row.table.diffusion) << ','
      << kCheck.name(row.table.check) << ',' << kMode.name(row.table.mode) << ',' << format_value(row.beta0)
      << ',' << format_value(row.sigma) << ',' << r.outcomes.size() << ',' << r.successes << ',' << r.aborted
      << ',' << format_value(r.rate) << ',' << format_value(mean_final_beta(r)) << ','
      << format_value(median(final_betas(r))) << ',';
  if (row.beta_bar) out << format_value(*row.beta_bar);
  out << '\n';
}

// ---- reproduction catalogue ----------------------------------------------

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(lo * std::pow(hi / lo, f));
  }
  out.back() = hi;
  return out;
}

ExperimentSpec figure1_base() {
  ExperimentSpec s;
  s.problem.name = "test1";
  s.config.params = {1.0, 10.0, 0.01, 1e6, Diffusion::Isotropic};
  s.config.controller = {0.1, 1.0, 1.1, 1.1, ControllerMode::IncreaseOnly, ThetaRelax::CapTolerance};
  s.config.check = FeasibilityCheck::GibbsWeighted;
  s.config.n_particles = 10;
  s.config.init = InitDistribution::gaussian(0.0, 1.0);
  s.config.seed = 1;
  return s;
}

ExperimentSpec mean_field_panel(double theta0, double eta_theta, FeasibilityCheck check) {
  ExperimentSpec s;
  s.problem.name = "rastrigin2d";
  s.config.params = {1.0, 0.5, 0.01, 1e6, Diffusion::Isotropic};
  s.config.controller = {0.1, theta0, 1.01, eta_theta, ControllerMode::IncreaseOnly, ThetaRelax::CapTolerance};
  s.config.check = check;
  s.config.n_particles = 100000;
  s.config.n_iterations = 600;
  s.config.seed = 1;
  s.note = "mean-field panel emulated with N = 100000 particles; the reference computation used 10^6 "
           "(override with --particles)";
  return s;
}

ExperimentSpec beta_sweep(FeasibilityCheck check, ControllerMode mode) {
  ExperimentSpec s;
  s.problem.name = "j1-sphere";
  s.config.params = {1.0, 0.6, 0.1, 1e6, Diffusion::Isotropic};
  s.config.controller = {1.0, 4.0, 1.1, 1.1, mode, ThetaRelax::CapTolerance};
  s.config.check = check;
  s.config.n_particles = 200;
  s.config.n_iterations = 300;
  s.config.seed = 1;
  s.runs = 500;
  s.tolerance = 0.1;
  s.sweep.problem = {"j1-sphere", "j1-torus", "j2-sphere", "j2-torus"};
  s.sweep.beta0 = log_grid(1e-5, 1e3, 9);
  return s;
}

ExperimentSpec sigma_sweep(Diffusion diffusion) {
  ExperimentSpec s;
  s.problem = {"qp", 10, 1, ""};
  s.config.params = {1.0, 1.0, 0.1, 1e6, diffusion};
  s.config.controller = {0.1, 4.0, 1.05, 1.05, ControllerMode::IncreaseOnly, ThetaRelax::CapTolerance};
  s.config.check = FeasibilityCheck::GibbsWeighted;
  s.config.n_particles = 500;
  s.config.n_iterations = 300;
  s.config.seed = 1;
  s.runs = 500;
  s.tolerance = 0.25;
  s.sweep.dimension = {10, 15, 20};
  s.sweep.sigma = log_grid(0.1, 3.0, 11);
  return s;
}

}  // namespace

// ---- public API ----------------------------------------------------------

const std::vector<std::string>& known_problem_names() {
  static const std::vector<std::string> names = {"test1",    "rastrigin2d", "j1-sphere", "j1-torus",
                                                 "j2-sphere", "j2-torus",   "qp"};
  return names;
}

Problem resolve_problem(const ProblemSelector& selector) {
  const std::string& n = selector.name;
  if (n == "test1") return make_test1();
  if (n == "rastrigin2d") return make_rastrigin2d();
  if (n == "j1-sphere") return make_benchmark5(Objective5::J1, Manifold::Sphere);
  if (n == "j1-torus") return make_benchmark5(Objective5::J1, Manifold::Torus);
  if (n == "j2-sphere") return make_benchmark5(Objective5::J2, Manifold::Sphere);
  if (n == "j2-torus") return make_benchmark5(Objective5::J2, Manifold::Torus);
  if (n == "qp") {
    if (!selector.file.empty()) {
      std::ifstream in(selector.file);
      if (!in) throw IoError("cannot read qp instance '" + selector.file + "'");
      std::ostringstream text;
      text << in.rdbuf();
      try {
        return make_qp_problem(qp_from_json(text.str()));
      } catch (const std::invalid_argument& e) {
        throw SpecError("field 'problem.file': " + std::string(e.what()));
      }
    }
    if (selector.dimension < 2) throw SpecError("field 'problem.dimension' must be >= 2 for qp");
    return make_random_qp(selector.dimension, selector.seed).first;
  }
  std::string known;
  for (const std::string& k : known_problem_names()) known += (known.empty() ? "" : ", ") + k;
  throw SpecError("field 'problem.name': unknown problem '" + n + "' (known: " + known + ")");
}

bool SweepAxes::empty() const noexcept {
  return beta0.empty() && sigma.empty() && !has_table_axes();
}

bool SweepAxes::has_table_axes() const noexcept {
  return !problem.empty() || !dimension.empty() || !diffusion.empty() || !check.empty() || !mode.empty();
}

ExperimentSpec parse_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  ObjectReader r(root, "");
  ExperimentSpec s;
  if (!r.has("problem")) throw SpecError("field 'problem' is required");
  s.problem = parse_problem(r.raw("problem"));

  RunConfig& c = s.config;
  if (r.has("params")) {
    ObjectReader p(r.raw("params"), "params");
    c.params.lambda = p.number("lambda", c.params.lambda);
    c.params.sigma = p.number("sigma", c.params.sigma);
    c.params.dt = p.number("dt", c.params.dt);
    c.params.alpha = p.number("alpha", c.params.alpha);
    c.params.diffusion = p.choice("diffusion", c.params.diffusion, kDiffusion);
    p.finish();
  }
  if (r.has("controller")) {
    ObjectReader p(r.raw("controller"), "controller");
    ControllerSettings& k = c.controller;
    k.beta0 = p.number("beta0", k.beta0);
    k.theta0 = p.number("theta0", k.theta0);
    k.eta_beta = p.number("eta_beta", k.eta_beta);
    k.eta_theta = p.number("eta_theta", k.eta_theta);
    k.mode = p.choice("mode", k.mode, kMode);
    k.relax = p.choice("relax", k.relax, kRelax);
    p.finish();
  }
  c.check = r.choice("check", c.check, kCheck);
  c.n_particles = as_count(r.unsigned_int("particles", c.n_particles));
  c.n_iterations = as_count(r.unsigned_int("iterations", c.n_iterations));
  c.seed = r.unsigned_int("seed", c.seed);
  c.workers = as_count(r.unsigned_int("threads", c.workers));
  if (r.has("init")) c.init = parse_init(r.raw("init"));
  if (r.has("batch")) c.batch = parse_batch(r.raw("batch"));
  if (r.has("snapshots")) {
    for (const json& v : r.array("snapshots")) {
      if (!v.is_number_unsigned()) throw SpecError("field 'snapshots' must hold non-negative integers");
      c.snapshot_iterations.push_back(v.get<std::size_t>());
    }
  }
  s.runs = as_count(r.unsigned_int("runs", s.runs));
  s.tolerance = r.number("tolerance", s.tolerance);
  s.output = r.text("output", s.output);
  s.note = r.text("note", "");
  if (r.has("sweep")) s.sweep = parse_sweep(r.raw("sweep"));
  r.finish();

  if (c.n_iterations < 1) throw SpecError("field 'iterations' must be >= 1");
  if (c.n_particles < 1) throw SpecError("field 'particles' must be >= 1");
  if (s.runs < 1) throw SpecError("field 'runs' must be >= 1");
  if (!(s.tolerance > 0.0)) throw SpecError("field 'tolerance' must be > 0");
  if (std::find(known_problem_names().begin(), known_problem_names().end(), s.problem.name) ==
      known_problem_names().end()) {
    (void)resolve_problem(s.problem);  // throws the descriptive error
  }
  for (const std::string& name : s.sweep.problem) {
    if (std::find(known_problem_names().begin(), known_problem_names().end(), name) == known_problem_names().end()) {
      throw SpecError("field 'sweep.problem': unknown problem '" + name + "'");
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("invalid configuration: ") + e.what());
  }
  return s;
}

ExperimentSpec load_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read experiment file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str());
}

std::string spec_to_json(const ExperimentSpec& spec) { return spec_json(spec).dump(2); }

void apply_overrides(ExperimentSpec& spec, const Overrides& o) {
  if (o.seed) spec.config.seed = *o.seed;
  if (o.particles) spec.config.n_particles = *o.particles;
  if (o.iterations) spec.config.n_iterations = *o.iterations;
  if (o.threads) spec.config.workers = *o.threads;
  if (o.runs) spec.runs = *o.runs;
  if (o.output) spec.output = *o.output;
  if (spec.config.n_iterations < 1) throw SpecError("--iters must be >= 1");
  if (spec.config.n_particles < 1) throw SpecError("--particles must be >= 1");
  if (spec.runs < 1) throw SpecError("--runs must be >= 1");
  try {
    spec.config.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("invalid configuration: ") + e.what());
  }
}

int cmd_run(const ExperimentSpec& spec, std::ostream& log) {
  const Problem problem = resolve_problem(spec.problem);
  const fs::path dir = prepare_directory(spec.output);
  const RunTrace trace = run_checked(problem, spec.config);

  const fs::path trace_path = dir / "trace.csv";
  std::ofstream out = open_output(trace_path);
  write_trace_csv(out, trace, problem.dimension);
  close_output(out, trace_path);
  for (const Snapshot& snap : trace.snapshots) {
    const fs::path path = dir / ("snapshot_" + std::to_string(snap.k) + ".csv");
    std::ofstream s = open_output(path);
    write_snapshot_csv(s, snap);
    close_output(s, path);
  }

  json summary = {{"command", "run"},
                  {"spec", spec_json(spec)},
                  {"problem", problem.name},
                  {"dimension", problem.dimension},
                  {"iterations_completed", trace.records.size()},
                  {"final_consensus", point_json(trace.final_consensus)},
                  {"final_beta", trace.final_controller.beta},
                  {"final_theta", trace.final_controller.theta},
                  {"decay_condition", spec.config.params.satisfies_decay_condition(problem.dimension)},
                  {"aborted", trace.aborted},
                  {"wall_seconds", trace.wall_seconds}};
  if (trace.aborted) summary["abort_reason"] = trace.abort_reason;
  if (problem.known_solution) {
    const RunOutcome o = evaluate_outcome(problem, trace, spec.config.seed, spec.tolerance);
    summary["known_solution"] = point_json(*problem.known_solution);
    summary["error_inf"] = o.error_inf;
    summary["success"] = o.success;
  }
  if (problem.known_beta_bar) summary["beta_bar"] = *problem.known_beta_bar;
  if (!spec.note.empty()) summary["note"] = spec.note;
  write_json(dir / "summary.json", summary);

  log << "run " << problem.name << ": " << trace.records.size() << " iterations, final beta "
      << trace.final_controller.beta << (trace.aborted ? ", ABORTED: " + trace.abort_reason : std::string())
      << " -> " << dir.string() << '\n';
  return trace.aborted ? kExitAborted : kExitOk;
}

int cmd_sweep(const ExperimentSpec& spec, std::ostream& log) {
  const SweepAxes& axes = spec.sweep;
  if (axes.empty()) throw SpecError("field 'sweep': at least one non-empty axis is required for a sweep");

  const std::vector<std::string> problems = axes.problem.empty() ? std::vector{spec.problem.name} : axes.problem;
  const std::vector<std::size_t> dims = axes.dimension.empty() ? std::vector{spec.problem.dimension} : axes.dimension;
  const std::vector<Diffusion> diffusions =
      axes.diffusion.empty() ? std::vector{spec.config.params.diffusion} : axes.diffusion;
  const std::vector<FeasibilityCheck> checks = axes.check.empty() ? std::vector{spec.config.check} : axes.check;
  const std::vector<ControllerMode> modes = axes.mode.empty() ? std::vector{spec.config.controller.mode} : axes.mode;
  const std::vector<double> betas = axes.beta0.empty() ? std::vector{spec.config.controller.beta0} : axes.beta0;
  const std::vector<double> sigmas = axes.sigma.empty() ? std::vector{spec.config.params.sigma} : axes.sigma;
  if (!axes.dimension.empty()) {
    for (const std::string& p : problems) {
      if (p != "qp") throw SpecError("field 'sweep.dimension' only applies to the qp problem, not '" + p + "'");
    }
  }

  const fs::path dir = prepare_directory(spec.output);
  const std::size_t workers = std::max<std::size_t>(spec.config.workers, 1);
  const auto start = std::chrono::steady_clock::now();

  std::vector<SweepRow> rows;
  std::map<std::string, std::vector<std::size_t>> tables;
  for (const std::string& pname : problems) {
    for (std::size_t dim : dims) {
      ProblemSelector selector = spec.problem;
      selector.name = pname;
      selector.dimension = dim;
      const Problem problem = resolve_problem(selector);
      if (!problem.known_solution) {
        throw SpecError("problem '" + pname + "' has no known solution, so success rates are undefined");
      }
      for (Diffusion diffusion : diffusions) {
        for (FeasibilityCheck check : checks) {
          for (ControllerMode mode : modes) {
            const TableKey key{pname, problem.dimension, diffusion, check, mode};
            const std::string table = table_file_name(axes, key);
            for (double beta0 : betas) {
              for (double sigma : sigmas) {
                RunConfig config = spec.config;
                config.params.diffusion = diffusion;
                config.params.sigma = sigma;
                config.check = check;
                config.controller.mode = mode;
                config.controller.beta0 = beta0;
                config.snapshot_iterations.clear();
                SuccessReport report;
                try {
                  report = success_rate(problem, config, spec.runs, spec.tolerance, workers);
                } catch (const std::invalid_argument& e) {
                  throw SpecError(e.what());
                }
                log << pname << " d=" << problem.dimension << ' ' << kDiffusion.name(diffusion) << ' '
                    << kCheck.name(check) << ' ' << kMode.name(mode) << " beta0=" << beta0 << " sigma=" << sigma
                    << ": rate " << report.rate << " (" << report.successes << '/' << spec.runs << ", "
                    << report.aborted << " aborted)\n";
                tables[table].push_back(rows.size());
                rows.push_back({key, beta0, sigma, std::move(report), problem.known_beta_bar});
              }
            }
          }
        }
      }
    }
  }

  const fs::path all_path = dir / "sweep.csv";
  std::ofstream all = open_output(all_path);
  all << kSweepHeader << '\n';
  for (const SweepRow& row : rows) write_sweep_row(all, row);
  close_output(all, all_path);
  if (axes.has_table_axes()) {
    for (const auto& [name, indices] : tables) {
      const fs::path path = dir / name;
      std::ofstream t = open_output(path);
      t << kSweepHeader << '\n';
      for (std::size_t i : indices) write_sweep_row(t, rows[i]);
      close_output(t, path);
    }
  }

  json points = json::array();
  for (const SweepRow& row : rows) {
    json outcomes = json::array();
    for (const RunOutcome& o : row.report.outcomes) {
      json jo = {{"seed", o.seed},
                 {"success", o.success},
                 {"aborted", o.aborted},
                 {"final_beta", o.final_beta},
                 {"error_inf", std::isfinite(o.error_inf) ? json(o.error_inf) : json(nullptr)}};
      if (o.aborted) jo["abort_reason"] = o.abort_reason;
      outcomes.push_back(std::move(jo));
    }
    points.push_back({{"problem", row.table.problem},
                      {"dimension", row.table.dimension},
                      {"diffusion", kDiffusion.name(row.table.diffusion)},
                      {"check", kCheck.name(row.table.check)},
                      {"mode", kMode.name(row.table.mode)},
                      {"beta0", row.beta0},
                      {"sigma", row.sigma},
                      {"rate", row.report.rate},
                      {"successes", row.report.successes},
                      {"aborted", row.report.aborted},
                      {"wall_seconds", row.report.wall_seconds},
                      {"outcomes", std::move(outcomes)}});
  }
  json summary = {{"command", "sweep"},
                  {"spec", spec_json(spec)},
                  {"points", std::move(points)},
                  {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  if (!spec.note.empty()) summary["note"] = spec.note;
  write_json(dir / "summary.json", summary);
  log << "sweep: " << rows.size() << " points -> " << dir.string() << '\n';
  return kExitOk;
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = {"fig1", "fig2", "fig4", "fig5", "fig6", "fig7", "fig8"};
  return ids;
}

std::vector<FigurePart> reproduction_specs(const std::string& figure) {
  if (figure == "fig1") {
    ExperimentSpec s = figure1_base();
    s.config.n_iterations = 150;
    s.config.snapshot_iterations = {0, 50, 100, 150};
    return {{"snapshots", false, s}};
  }
  if (figure == "fig2") {
    ExperimentSpec s = figure1_base();
    s.config.n_iterations = 300;
    return {{"trace", false, s}};
  }
  if (figure == "fig4") {
    return {{"panel_a", false, mean_field_panel(16.0, 1.01, FeasibilityCheck::PlainMean)},
            {"panel_b", false, mean_field_panel(0.25, 1.01, FeasibilityCheck::PlainMean)},
            {"panel_c", false, mean_field_panel(16.0, 1.1, FeasibilityCheck::PlainMean)},
            {"panel_d", false, mean_field_panel(16.0, 1.01, FeasibilityCheck::GibbsWeighted)}};
  }
  if (figure == "fig5" || figure == "fig6") {
    return {{"check_plain", true, beta_sweep(FeasibilityCheck::PlainMean, ControllerMode::IncreaseOnly)},
            {"check_gibbs", true, beta_sweep(FeasibilityCheck::GibbsWeighted, ControllerMode::IncreaseOnly)},
            {"check_gibbs_decreasing", true,
             beta_sweep(FeasibilityCheck::GibbsWeighted, ControllerMode::DecreaseUntilFirstViolation)}};
  }
  if (figure == "fig7") return {{"isotropic", true, sigma_sweep(Diffusion::Isotropic)}};
  if (figure == "fig8") return {{"anisotropic", true, sigma_sweep(Diffusion::Anisotropic)}};
  std::string known;
  for (const std::string& id : figure_ids()) known += (known.empty() ? "" : ", ") + id;
  throw SpecError("unknown figure id '" + figure + "' (known: " + known + ")");
}

int cmd_reproduce(const std::string& figure, const Overrides& overrides, std::ostream& log) {
  std::vector<FigurePart> parts = reproduction_specs(figure);
  const fs::path base = fs::path(overrides.output.value_or("out")) / figure;
  Overrides per_part = overrides;
  per_part.output.reset();
  int status = kExitOk;
  for (FigurePart& part : parts) {
    apply_overrides(part.spec, per_part);
    part.spec.output = (base / part.id).string();
    log << figure << '/' << part.id << ":\n";
    const int code = part.sweep ? cmd_sweep(part.spec, log) : cmd_run(part.spec, log);
    status = std::max(status, code);
  }
  return status;
}

int cmd_qp_gen(std::size_t dim, std::uint64_t seed, const std::string& path, std::ostream& out) {
  if (dim < 2) throw SpecError("qp-gen: --dim must be >= 2");
  const std::string text = qp_to_json(make_random_qp_instance(dim, seed));
  if (path.empty()) {
    out << text << '\n';
    return kExitOk;
  }
  const fs::path target(path);
  if (target.has_parent_path()) prepare_directory(target.parent_path().string());
  std::ofstream file = open_output(target);
  file << text << '\n';
  close_output(file, target);
  return kExitOk;
}

}  // namespace cbo
