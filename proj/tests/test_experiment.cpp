#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cbo/experiment.hpp"
#include "cbo/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("cbo_test_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" +
             std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string line; std::getline(s, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CBO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallRun = R"({
  "problem": "test1",
  "params": {"lambda": 1, "sigma": 10, "dt": 0.01},
  "controller": {"beta0": 0.1, "theta0": 1, "eta_beta": 1.1, "eta_theta": 1.1, "relax": "cap-tolerance"},
  "check": "gibbs",
  "particles": 30,
  "iterations": 40,
  "seed": 5,
  "snapshots": [0, 40]
})";

// ---------------------------------------------------------------- parsing

TEST(ExperimentFile, ParsesFieldsAndDefaults) {
  const auto s = cbo::parse_spec(kSmallRun);
  EXPECT_EQ(s.problem.name, "test1");
  EXPECT_EQ(s.config.params.sigma, 10.0);
  EXPECT_EQ(s.config.params.alpha, 1e6);
  EXPECT_EQ(s.config.controller.relax, cbo::ThetaRelax::CapTolerance);
  EXPECT_EQ(s.config.controller.mode, cbo::ControllerMode::IncreaseOnly);
  EXPECT_EQ(s.config.n_particles, 30u);
  EXPECT_EQ(s.config.n_iterations, 40u);
  EXPECT_EQ(s.config.seed, 5u);
  EXPECT_EQ(s.config.snapshot_iterations, (std::vector<std::size_t>{0, 40}));
  EXPECT_EQ(s.runs, 1u);
  EXPECT_EQ(s.output, "out");
  EXPECT_TRUE(s.sweep.empty());
}

TEST(ExperimentFile, EchoRoundTripReproducesTheRun) {
  const auto first = cbo::parse_spec(kSmallRun);
  const std::string echoed = cbo::spec_to_json(first);
  const auto second = cbo::parse_spec(echoed);
  EXPECT_EQ(cbo::spec_to_json(second), echoed);
  const auto problem = cbo::resolve_problem(first.problem);
  const auto a = cbo::run(problem, first.config);
  const auto b = cbo::run(problem, second.config);
  std::stringstream sa, sb;
  cbo::write_trace_csv(sa, a, 1);
  cbo::write_trace_csv(sb, b, 1);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(ExperimentFile, EchoRoundTripKeepsEverything) {
  const auto s = cbo::parse_spec(R"({
    "problem": {"name": "qp", "dimension": 6, "seed": 3},
    "params": {"diffusion": "anisotropic", "alpha": 1000},
    "controller": {"mode": "decrease-until-violation"},
    "check": "plain-mean",
    "init": {"kind": "gaussian", "mean": 0.5, "stddev": 2},
    "batch": {"kind": "partition", "size": 4, "scope": "all"},
    "particles": 40, "runs": 3, "tolerance": 0.2, "output": "x", "note": "hello",
    "sweep": {"sigma": [0.5, 1], "dimension": [6, 8], "check": ["gibbs", "plain-mean"]}
  })");
  const auto back = cbo::parse_spec(cbo::spec_to_json(s));
  EXPECT_EQ(back.problem, s.problem);
  EXPECT_EQ(back.config.params.diffusion, cbo::Diffusion::Anisotropic);
  EXPECT_EQ(back.config.controller.mode, cbo::ControllerMode::DecreaseUntilFirstViolation);
  EXPECT_EQ(back.config.check, cbo::FeasibilityCheck::PlainMean);
  ASSERT_TRUE(back.config.init);
  EXPECT_EQ(back.config.init->kind, cbo::InitDistribution::Kind::Gaussian);
  EXPECT_EQ(back.config.init->stddev, 2.0);
  ASSERT_TRUE(back.config.batch);
  EXPECT_EQ(back.config.batch->size, 4u);
  EXPECT_EQ(back.sweep.sigma, s.sweep.sigma);
  EXPECT_EQ(back.sweep.dimension, s.sweep.dimension);
  EXPECT_EQ(back.sweep.check, s.sweep.check);
  EXPECT_EQ(back.note, "hello");
  EXPECT_EQ(back.tolerance, 0.2);
  EXPECT_EQ(back.runs, 3u);
}

void expect_spec_error(const std::string& text, const std::string& fragment) {
  try {
    cbo::parse_spec(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const cbo::SpecError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(ExperimentFile, RejectsBadInput) {
  expect_spec_error("{", "malformed JSON");
  expect_spec_error("{}", "'problem'");
  expect_spec_error(R"({"problem": "test1", "particels": 10})", "unknown field 'particels'");
  expect_spec_error(R"({"problem": "test1", "params": {"sigmaa": 1}})", "unknown field 'params.sigmaa'");
  expect_spec_error(R"({"problem": "foo"})", "foo");
  expect_spec_error(R"({"problem": "test1", "iterations": 0})", "iterations");
  expect_spec_error(R"({"problem": "test1", "particles": -3})", "particles");
  expect_spec_error(R"({"problem": "test1", "params": {"dt": 0}})", "dt");
  expect_spec_error(R"({"problem": "test1", "check": "strict"})", "check");
  expect_spec_error(R"({"problem": "test1", "controller": {"eta_beta": 1}})", "invalid configuration");
  expect_spec_error(R"({"problem": "test1", "sweep": {"problem": ["bar"]}})", "bar");
  expect_spec_error(R"({"problem": "test1", "sweep": {"sigma": []}})", "must not be empty");
  expect_spec_error(R"({"problem": "test1", "tolerance": 0})", "tolerance");
}

TEST(ExperimentFile, Overrides) {
  auto s = cbo::parse_spec(kSmallRun);
  cbo::Overrides o;
  o.seed = 99;
  o.iterations = 7;
  o.output = "elsewhere";
  cbo::apply_overrides(s, o);
  EXPECT_EQ(s.config.seed, 99u);
  EXPECT_EQ(s.config.n_iterations, 7u);
  EXPECT_EQ(s.output, "elsewhere");
  EXPECT_EQ(s.config.n_particles, 30u);
  o.iterations = 0;
  EXPECT_THROW(cbo::apply_overrides(s, o), cbo::SpecError);
}

TEST(Problems, ResolveKnownNames) {
  for (const auto& name : cbo::known_problem_names()) {
    const auto p = cbo::resolve_problem({name, 4, 1, ""});
    EXPECT_EQ(p.name, name);
    EXPECT_TRUE(p.known_solution.has_value());
  }
  EXPECT_EQ(cbo::resolve_problem({"qp", 12, 1, ""}).dimension, 12u);
  EXPECT_THROW(cbo::resolve_problem({"nope", 4, 1, ""}), cbo::SpecError);
  EXPECT_THROW(cbo::resolve_problem({"qp", 1, 1, ""}), cbo::SpecError);
  EXPECT_THROW(cbo::resolve_problem({"qp", 4, 1, "/nonexistent/qp.json"}), cbo::IoError);
}

// ------------------------------------------------------------ commands

TEST(Commands, RunWritesOutputs) {
  TempDir tmp;
  auto s = cbo::parse_spec(kSmallRun);
  s.output = (tmp.path() / "run").string();
  std::stringstream log;
  EXPECT_EQ(cbo::cmd_run(s, log), cbo::kExitOk);
  const auto dir = tmp.path() / "run";
  std::ifstream trace(dir / "trace.csv");
  const auto records = cbo::read_trace_csv(trace);
  EXPECT_EQ(records.size(), 40u);
  EXPECT_TRUE(fs::exists(dir / "snapshot_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "snapshot_40.csv"));
  EXPECT_EQ(lines_of(read_file(dir / "snapshot_40.csv")).size(), 31u);
  const std::string summary = read_file(dir / "summary.json");
  EXPECT_NE(summary.find("\"final_beta\""), std::string::npos);
  EXPECT_NE(summary.find("\"decay_condition\""), std::string::npos);
  EXPECT_NE(summary.find("\"cap-tolerance\""), std::string::npos);
}

TEST(Commands, QpFileRoundTripThroughProblemSelector) {
  TempDir tmp;
  const auto file = tmp.path() / "qp.json";
  std::stringstream unused;
  EXPECT_EQ(cbo::cmd_qp_gen(5, 8, file.string(), unused), cbo::kExitOk);
  const auto from_file = cbo::resolve_problem({"qp", 0, 0, file.string()});
  const auto generated = cbo::resolve_problem({"qp", 5, 8, ""});
  EXPECT_EQ(*from_file.known_solution, *generated.known_solution);
  std::stringstream printed;
  cbo::cmd_qp_gen(5, 8, "", printed);
  EXPECT_EQ(printed.str(), read_file(file));
}

TEST(Commands, BetaSweepHasOneRowPerGridPoint) {
  TempDir tmp;
  auto s = cbo::parse_spec(R"({
    "problem": "test1", "particles": 20, "iterations": 30, "runs": 2, "seed": 1,
    "params": {"sigma": 5},
    "sweep": {"beta0": [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1, 10, 100, 1000]}
  })");
  s.output = tmp.path().string();
  std::stringstream log;
  EXPECT_EQ(cbo::cmd_sweep(s, log), cbo::kExitOk);
  const auto rows = lines_of(read_file(tmp.path() / "sweep.csv"));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0],
            "problem,dimension,diffusion,check,mode,beta0,sigma,runs,successes,aborted,rate,mean_final_beta,"
            "median_final_beta,beta_bar");
  EXPECT_EQ(rows[1].rfind("test1,1,isotropic,gibbs,increase-only,1e-05,5,2,", 0), 0u) << rows[1];
  EXPECT_EQ(rows[9].rfind("test1,1,isotropic,gibbs,increase-only,1000,5,2,", 0), 0u) << rows[9];
  EXPECT_EQ(rows[1].substr(rows[1].rfind(',') + 1), "4.3");
  // Only row axes: no per-table files.
  for (const auto& entry : fs::directory_iterator(tmp.path()))
    EXPECT_EQ(entry.path().filename().string().rfind("table_", 0), std::string::npos);
}

TEST(Commands, SweepWritesOneTablePerTableAxisValue) {
  TempDir tmp;
  auto s = cbo::parse_spec(R"({
    "problem": {"name": "qp", "dimension": 4}, "particles": 20, "iterations": 10, "runs": 1,
    "sweep": {"dimension": [4], "sigma": [0.5, 1.0]}
  })");
  s.output = tmp.path().string();
  std::stringstream log;
  EXPECT_EQ(cbo::cmd_sweep(s, log), cbo::kExitOk);
  const auto table = tmp.path() / "table_dimension-4.csv";
  ASSERT_TRUE(fs::exists(table));
  EXPECT_EQ(lines_of(read_file(table)).size(), 3u);
  EXPECT_EQ(lines_of(read_file(tmp.path() / "sweep.csv")).size(), 3u);
}

TEST(Commands, SweepRejectsDimensionAxisOnFixedSizeProblem) {
  TempDir tmp;
  auto s = cbo::parse_spec(R"({"problem": "test1", "sweep": {"dimension": [2, 3]}})");
  s.output = tmp.path().string();
  std::stringstream log;
  EXPECT_THROW(cbo::cmd_sweep(s, log), cbo::SpecError);
  auto empty = cbo::parse_spec(R"({"problem": "test1"})");
  EXPECT_THROW(cbo::cmd_sweep(empty, log), cbo::SpecError);
}

TEST(Commands, UnwritableOutputIsIoError) {
  auto s = cbo::parse_spec(kSmallRun);
  s.output = "/proc/cbo_not_writable/run";
  std::stringstream log;
  EXPECT_THROW(cbo::cmd_run(s, log), cbo::IoError);
}

TEST(Commands, UnknownFigure) {
  EXPECT_THROW(cbo::reproduction_specs("fig3"), cbo::SpecError);
  EXPECT_THROW(cbo::reproduction_specs(""), cbo::SpecError);
  for (const auto& id : cbo::figure_ids()) EXPECT_FALSE(cbo::reproduction_specs(id).empty()) << id;
}

TEST(Commands, ReproduceFigureWithOverrides) {
  TempDir tmp;
  cbo::Overrides o;
  o.output = tmp.path().string();
  o.iterations = 20;
  std::stringstream log;
  EXPECT_EQ(cbo::cmd_reproduce("fig1", o, log), cbo::kExitOk);
  const auto dir = tmp.path() / "fig1" / "snapshots";
  std::ifstream trace(dir / "trace.csv");
  EXPECT_EQ(cbo::read_trace_csv(trace).size(), 20u);
  EXPECT_TRUE(fs::exists(dir / "snapshot_0.csv"));
}

// ------------------------------------------- documented figure settings

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream s(line);
  std::string cell;
  std::getline(s, cell, '|');
  while (std::getline(s, cell, '|')) {
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

std::string name_of(cbo::FeasibilityCheck c) { return c == cbo::FeasibilityCheck::PlainMean ? "plain-mean" : "gibbs"; }
std::string name_of(cbo::ControllerMode m) {
  return m == cbo::ControllerMode::IncreaseOnly ? "increase-only" : "decrease-until-violation";
}
std::string name_of(cbo::Diffusion d) { return d == cbo::Diffusion::Isotropic ? "isotropic" : "anisotropic"; }

TEST(Figures, DocumentedTableMatchesCatalogue) {
  const auto lines = lines_of(read_file(fs::path(CBO_SOURCE_DIR) / "docs" / "figures.md"));
  std::vector<std::string> header;
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> rows;
  for (const auto& line : lines) {
    if (line.rfind("| figure", 0) == 0) {
      header = split_cells(line);
      continue;
    }
    if (header.empty() || line.rfind("|---", 0) == 0 || line[0] != '|') continue;
    const auto cells = split_cells(line);
    ASSERT_GE(cells.size(), header.size() - 1) << line;
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows[{row["figure"], row["part"]}] = row;
  }

  std::size_t parts = 0;
  for (const auto& figure : cbo::figure_ids()) {
    for (const auto& part : cbo::reproduction_specs(figure)) {
      ++parts;
      SCOPED_TRACE(figure + "/" + part.id);
      const auto it = rows.find({figure, part.id});
      ASSERT_NE(it, rows.end());
      auto row = it->second;
      const auto& s = part.spec;
      const auto& c = s.config;
      auto number = [&](const std::string& key, double value, bool swept) {
        if (swept) {
          EXPECT_EQ(row[key], "sweep") << key;
        } else {
          EXPECT_DOUBLE_EQ(std::stod(row[key]), value) << key;
        }
      };
      EXPECT_EQ(row["kind"], part.sweep ? "sweep" : "run");
      EXPECT_EQ(row["problem"], s.sweep.problem.empty() ? s.problem.name : "sweep");
      number("particles", static_cast<double>(c.n_particles), false);
      number("iterations", static_cast<double>(c.n_iterations), false);
      number("dt", c.params.dt, false);
      number("lambda", c.params.lambda, false);
      number("sigma", c.params.sigma, !s.sweep.sigma.empty());
      number("beta0", c.controller.beta0, !s.sweep.beta0.empty());
      number("theta0", c.controller.theta0, false);
      number("eta_beta", c.controller.eta_beta, false);
      number("eta_theta", c.controller.eta_theta, false);
      number("runs", static_cast<double>(s.runs), false);
      number("tolerance", s.tolerance, false);
      EXPECT_EQ(row["check"], name_of(c.check));
      EXPECT_EQ(row["mode"], name_of(c.controller.mode));
      EXPECT_EQ(row["diffusion"], name_of(c.params.diffusion));
      EXPECT_EQ(c.controller.relax, cbo::ThetaRelax::CapTolerance);
      EXPECT_EQ(c.params.alpha, 1e6);
      EXPECT_EQ(c.seed, 1u);
    }
  }
  EXPECT_EQ(parts, rows.size());
}

// ------------------------------------------------------------- CLI

TEST(Cli, ExitCodes) {
  TempDir tmp;
  const auto good = tmp.path() / "good.json";
  write_file(good, kSmallRun);
  const auto out = tmp.path() / "out";
  EXPECT_EQ(run_cli("run --spec " + good.string() + " --out " + out.string()), 0);
  std::ifstream trace(out / "trace.csv");
  EXPECT_EQ(cbo::read_trace_csv(trace).size(), 40u);
  EXPECT_EQ(run_cli("run --spec " + good.string() + " --iters 12 --out " + out.string()), 0);
  std::ifstream shorter(out / "trace.csv");
  EXPECT_EQ(cbo::read_trace_csv(shorter).size(), 12u);

  const auto unknown = tmp.path() / "unknown.json";
  write_file(unknown, R"({"problem": "foo"})");
  EXPECT_EQ(run_cli("run --spec " + unknown.string() + " --out " + out.string()), 2);

  const auto zero = tmp.path() / "zero.json";
  write_file(zero, R"({"problem": "test1", "iterations": 0})");
  EXPECT_EQ(run_cli("run --spec " + zero.string() + " --out " + out.string()), 2);

  EXPECT_EQ(run_cli("run --spec " + good.string() + " --out /proc/cbo_not_writable/x"), 3);
  EXPECT_EQ(run_cli("run --spec " + (tmp.path() / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("reproduce --figure fig9"), 2);
  EXPECT_EQ(run_cli("qp-gen --dim 1"), 2);
  EXPECT_EQ(run_cli("qp-gen --dim 3 --seed 2 --out " + (tmp.path() / "qp.json").string()), 0);
  EXPECT_TRUE(fs::exists(tmp.path() / "qp.json"));
}

}  // namespace
