// scenario.hpp - batch front end: scenario files, validation, dispatch
//
// A scenario is a JSON document:
//   { "name": ..., "command": ..., "seed": ..., "parameters": {...} }
// Frequencies in scenario files and CSV outputs are ordinary frequencies
// (Hz); lengths carry their unit in the key name. Seeds are mandatory; runs
// are hermetic (only the scenario file and files it names are read) and
// byte-deterministic for a given (scenario, seed).
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sqclock {

// Schema / configuration problems; mapped to exit code 2 by the CLI.
class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Diagnostic {
    std::string path;     // e.g. "parameters.squeeze.photons_per_measurement"
    std::string message;

    [[nodiscard]] std::string str() const { return path + ": " + message; }
};

struct Scenario {
    std::string name;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json parameters;
    std::string source_dir;  // directory of the scenario file, for relative inputs
};

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> commands = {
        "calibrate-coupling", "qpn-fit",        "squeeze-sweep",
        "correlation-sweep",  "compare-clocks", "adev"};
    return commands;
}

Scenario load_scenario(const std::string& path);

// Dry-run schema and invariant check; no computation.
std::vector<Diagnostic> validate_scenario(const Scenario& scenario);

struct RunResult {
    nlohmann::json summary;
    std::vector<std::string> files_written;
};

// Executes the scenario's command, writing a run manifest, CSV outputs and a
// summary into out_dir. The manifest is itself a valid scenario file that
// reproduces the run.
RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override, int threads);

// FNV-1a 64-bit content hash used to tag manifests.
std::uint64_t content_hash(const std::string& text);

}  // namespace sqclock
