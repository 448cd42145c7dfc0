#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/io.hpp"
#include "bohlkit/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bohlkit: Bohl exponents, dichotomies and perturbation plans for linear difference systems"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  std::uint64_t seed = 0;
  int horizon = 0, threads = 0;

  for (const std::string& task : bohlkit::kTasks) {
    CLI::App* sub = app.add_subcommand(task, "run a '" + task + "' scenario");
    auto* sc = sub->add_option("--scenario", scenario_path, "scenario document (JSON)")->check(CLI::ExistingFile);
    if (task != "verify") sc->required();
    sub->add_option("--out", out_dir, "output directory (default: $BOHLKIT_OUT or ./bohlkit_out)");
    sub->add_option("--seed", seed, "seed for randomized tasks, overrides the document");
    sub->add_option("--horizon", horizon, "override the system horizon")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  bohlkit::RunOptions opt;
  opt.task = sub->get_name();
  if (sub->count("--out")) opt.out_dir = out_dir;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--horizon")) opt.horizon = horizon;
  if (sub->count("--threads")) opt.threads = threads;

  bohlkit::RunResult r;
  if (sub->count("--scenario")) {
    try {
      r = bohlkit::run_scenario_text(bohlkit::io::read_file(scenario_path), opt);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: InvalidInput: %s\n", e.what());
      return 2;
    }
  } else {
    r = bohlkit::run_scenario(bohlkit::io::json{{"schema", bohlkit::io::kSchema}, {"task", "verify"}}, opt);
  }

  for (const auto& a : r.artifacts) std::printf("%s\n", a.c_str());
  if (r.exit_code != 0) {
    // message already starts with the error name
    std::fprintf(stderr, "error: %s", r.message.c_str());
    if (r.error_index >= 0) std::fprintf(stderr, " [index %ld]", r.error_index);
    std::fprintf(stderr, "\n");
  }
  return r.exit_code;
}
