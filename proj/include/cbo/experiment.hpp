#pragma once

// Experiment definitions (JSON), problem selection, and the run / sweep /
// reproduce / qp-gen commands behind the command-line tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/harness.hpp"
#include "cbo/problem.hpp"

namespace cbo {

/// Malformed or inconsistent experiment definition, or unknown names.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitAborted = 1, kExitUsage = 2, kExitIo = 3 };

struct ProblemSelector {
  std::string name;            ///< see known_problem_names()
  std::size_t dimension = 10;  ///< qp only
  std::uint64_t seed = 1;      ///< qp only: generator seed
  std::string file;            ///< qp only: load a serialized instance instead of generating

  friend bool operator==(const ProblemSelector&, const ProblemSelector&) = default;
};

/// "test1", "rastrigin2d", "j1-sphere", "j1-torus", "j2-sphere", "j2-torus", "qp".
const std::vector<std::string>& known_problem_names();

/// Builds the selected problem. Throws SpecError for unknown names or bad
/// parameters and IoError when a qp file cannot be read.
Problem resolve_problem(const ProblemSelector& selector);

/// Sweep axes. beta0 and sigma vary along the rows of a table; every
/// combination of the remaining axes gets its own table.
struct SweepAxes {
  std::vector<double> beta0;
  std::vector<double> sigma;
  std::vector<std::string> problem;
  std::vector<std::size_t> dimension;
  std::vector<Diffusion> diffusion;
  std::vector<FeasibilityCheck> check;
  std::vector<ControllerMode> mode;

  bool empty() const noexcept;
  bool has_table_axes() const noexcept;
};

struct ExperimentSpec {
  ProblemSelector problem;
  RunConfig config;
  std::size_t runs = 1;     ///< runs per sweep point
  double tolerance = 0.1;   ///< success threshold in the infinity norm
  SweepAxes sweep;
  std::string output = "out";
  std::string note;         ///< free text copied into summaries
};

/// Parses a JSON experiment definition (schema in docs/formats.md). Unknown
/// keys, wrong types and invalid values raise SpecError naming the field.
ExperimentSpec parse_spec(const std::string& json_text);
/// Reads and parses a file; an unreadable file is a SpecError.
ExperimentSpec load_spec(const std::filesystem::path& path);
/// Complete JSON form of a spec: parse_spec(spec_to_json(s)) reproduces s.
std::string spec_to_json(const ExperimentSpec& spec);

/// Command-line values that take precedence over the definition file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> runs;
  std::optional<std::string> output;
};

void apply_overrides(ExperimentSpec& spec, const Overrides& overrides);

/// One run: writes trace.csv, snapshot_<k>.csv and summary.json to the
/// output directory. Returns kExitAborted when the run blew up.
int cmd_run(const ExperimentSpec& spec, std::ostream& log);

/// Success-rate sweep: writes sweep.csv (all points), one table_<...>.csv per
/// combination of table axes, and summary.json with per-run outcomes.
int cmd_sweep(const ExperimentSpec& spec, std::ostream& log);

/// One piece of a figure reproduction.
struct FigurePart {
  std::string id;       ///< subdirectory name, e.g. "panel_a"
  bool sweep = false;   ///< cmd_sweep when true, cmd_run otherwise
  ExperimentSpec spec;  ///< output is relative to the figure directory
};

const std::vector<std::string>& figure_ids();
/// Built-in definitions. Throws SpecError for an unknown id.
std::vector<FigurePart> reproduction_specs(const std::string& figure);

/// Runs every part of a figure into <output>/<figure>/<part>/.
int cmd_reproduce(const std::string& figure, const Overrides& overrides, std::ostream& log);

/// Generates a QP instance and writes its JSON form to `path`, or to `out`
/// when the path is empty.
int cmd_qp_gen(std::size_t dim, std::uint64_t seed, const std::string& path, std::ostream& out);

}  // namespace cbo
