// cbo: command-line driver for penalized consensus-based optimization runs.
//
//   cbo run --spec exp.json [--seed N --particles N --iters K --threads T --out DIR]
//   cbo sweep --spec exp.json [--runs R ...]
//   cbo reproduce --figure fig4 [--out DIR ...]
//   cbo qp-gen --dim 10 --seed 1 [--out instance.json]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cbo/experiment.hpp"

namespace {

std::optional<std::size_t> threads_from_env() {
  const char* value = std::getenv("CBO_THREADS");
  if (!value || !*value) return std::nullopt;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(value, &end, 10);
  if (*end != '\0' || n == 0) throw cbo::SpecError("CBO_THREADS must be a positive integer");
  return static_cast<std::size_t>(n);
}

template <typename T>
std::optional<T> flag(const CLI::Option* option, const T& value) {
  return option->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized consensus-based optimization with adaptive penalty parameter"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string figure;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t particles = 0, iterations = 0, threads = 0, runs = 0, dim = 10;

  std::vector<CLI::App*> commands;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Base seed");
    cmd->add_option("--particles", particles, "Number of particles N")->check(CLI::PositiveNumber);
    cmd->add_option("--iters", iterations, "Number of iterations K")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "Worker threads (default: CBO_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--runs", runs, "Runs per sweep point")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output directory");
    commands.push_back(cmd);
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run once and write the trace");
  run_cmd->add_option("--spec", spec_path, "Experiment definition (JSON)")->required();
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Success-rate sweep over the experiment's axes");
  sweep_cmd->add_option("--spec", spec_path, "Experiment definition (JSON)")->required();
  add_common(sweep_cmd);

  CLI::App* repro_cmd = app.add_subcommand("reproduce", "Write the data behind a built-in figure");
  repro_cmd->add_option("--figure", figure, "fig1, fig2, fig4, fig5, fig6, fig7 or fig8")->required();
  add_common(repro_cmd);

  CLI::App* qp_cmd = app.add_subcommand("qp-gen", "Generate a random QP instance as JSON");
  qp_cmd->add_option("--dim", dim, "Dimension d >= 2");
  qp_cmd->add_option("--seed", seed, "Generator seed");
  qp_cmd->add_option("--out", out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cbo::kExitUsage;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (active == qp_cmd) {
      return cbo::cmd_qp_gen(dim, active->get_option("--seed")->count() ? seed : 1, out, std::cout);
    }

    cbo::Overrides overrides;
    overrides.seed = flag(active->get_option("--seed"), seed);
    overrides.particles = flag(active->get_option("--particles"), particles);
    overrides.iterations = flag(active->get_option("--iters"), iterations);
    overrides.runs = flag(active->get_option("--runs"), runs);
    overrides.output = flag(active->get_option("--out"), out);
    overrides.threads = flag(active->get_option("--threads"), threads);
    if (!overrides.threads) overrides.threads = threads_from_env();
    if (!overrides.threads) overrides.threads = std::max(1u, std::thread::hardware_concurrency());

    if (active == repro_cmd) return cbo::cmd_reproduce(figure, overrides, std::cout);

    cbo::ExperimentSpec spec = cbo::load_spec(spec_path);
    cbo::apply_overrides(spec, overrides);
    return active == run_cmd ? cbo::cmd_run(spec, std::cout) : cbo::cmd_sweep(spec, std::cout);
  } catch (const cbo::SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cbo::kExitUsage;
  } catch (const cbo::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return cbo::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return cbo::kExitAborted;
  }
}
