#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bohlkit/io.hpp"

namespace bohlkit {

inline const std::vector<std::string> kTasks = {"simulate", "exponents",     "dichotomy", "triangularize",
                                                "perturb",  "spectrum",      "verify"};

inline constexpr int kMaxScenarioHorizon = 1 << 16;

struct Scenario {
  std::string schema = io::kSchema;
  std::string task;
  io::json system_spec;   // as given
  std::optional<MatrixSequence> system;  // absent for verify
  io::json params = io::json::object();
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

Scenario parse_scenario(const io::json& doc);
// Normalized document: the system is written in materialized structural form.
io::json scenario_to_json(const Scenario& s);

struct RunOptions {
  std::optional<std::string> task;  // must match the document's task when both are given
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<int> threads;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 validation, 3 hypothesis, 4 numeric
  std::string error_name;
  long error_index = -1;
  std::string message;
  std::vector<std::string> artifacts;
};

// Output directory precedence: options, document "out", $BOHLKIT_OUT, ./bohlkit_out.
RunResult run_scenario(const io::json& doc, const RunOptions& opt = {});
RunResult run_scenario_text(const std::string& text, const RunOptions& opt = {});

int exit_code_for(ErrorClass c);

}  // namespace bohlkit
