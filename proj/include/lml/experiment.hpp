#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lml/sde_core.hpp"

namespace lml {

// A fully resolved experiment: command, model, batch shape, seeding, output dir.
// The seed determines every draw (trial i reads counter stream (seed, i)), so a
// re-run with the same spec reproduces all artifacts byte for byte.
struct ExperimentSpec {
    std::string command;  // check-assumptions | simulate-path | couple | stopping | mixing | a1-check
    ModelConfig model;
    Vec2 x0{2.0, 1.0};
    Vec2 y0{-2.0, -1.0};
    std::size_t n_trials = 10000;
    long horizon_steps = 50;
    std::uint64_t seed = 12345;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir = "lml-out";
    // mixing command
    double mixing_t_max = 30.0;
    double mixing_dt = 0.5;

    static ExperimentSpec from_json_text(const std::string& text);
    static ExperimentSpec from_file(const std::string& path);
    std::string resolved_json() const;  // canonical config echoed into every output

    // LML_SEED / LML_TRIALS / LML_THREADS / LML_OUT, applied when set
    void apply_env_overrides();
};

// ships with the repo as presets/preset-default.json
extern const char* const kDefaultPresetJson;

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> verdicts;  // one line per gate touched
    std::vector<std::string> artifacts; // files written
};

RunResult run(const ExperimentSpec& spec);

// write-temp-then-rename; creates parent directories
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace lml
