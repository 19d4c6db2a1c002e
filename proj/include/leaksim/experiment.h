#ifndef LEAKSIM_EXPERIMENT_H
#define LEAKSIM_EXPERIMENT_H

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/analysis.h"
#include "leaksim/circuit.h"
#include "leaksim/decoder.h"
#include "leaksim/engine.h"
#include "leaksim/scheduler.h"

namespace leaksim {

extern const char *const kVersion;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string name = "run";
    std::string code = "repetition";
    int distance = 3;
    int rounds = 10;
    std::string preset = "thermal";
    NoiseModel noise = noise_preset("thermal");
    SimMode mode = SimMode::rpa;
    uint64_t shots = 1000;
    uint64_t seed = 1;
    uint64_t first_shot = 0;
    int workers = 1;
    DecoderOptions decoder;
    FitOptions fit;
    bool flips_each_round = true;
    bool random_initial_bits = true;
    double phi = kInf;  // overrides noise.cz.phi when finite
    int jackknife_blocks = 20;
    /// First round of the long-time DEF average; negative means rounds / 2.
    int def_from_round = -1;
};

/// Parses one experiment. `path` prefixes field names in error messages.
ExperimentConfig config_from_json(const nlohmann::json &j, const std::string &path = "config");
nlohmann::json config_to_json(const ExperimentConfig &config);

/// Accepts a single experiment object, a batch {"defaults": {...}, "experiments": [...]} or a manifest.
/// With two experiments the second is the baseline of the first.
std::vector<ExperimentConfig> batch_from_json(const nlohmann::json &j);

/// 64-bit FNV-1a of the canonical JSON form.
uint64_t config_hash(const ExperimentConfig &config);

Circuit build_circuit(const ExperimentConfig &config);

struct ExperimentRun {
    ExperimentConfig config;
    Circuit circuit;
    Schedule schedule;
    ShotStatistics stats;
    size_t peak_vector_length = 0;
    int peak_alive = 0;
    double seconds = 0;
};

struct RunHooks {
    /// Called with every record in shot order.
    std::function<void(const TrajectoryRecord &)> on_record;
    /// Progress and throughput lines; null disables logging.
    std::ostream *log = nullptr;
};

ExperimentRun run_experiment(const ExperimentConfig &config, const RunHooks &hooks = {});

/// Fit, curves and tables of one run.
nlohmann::json run_summary(const ExperimentRun &run);
/// Added LER and DEF of a leaky run against its baseline.
nlohmann::json paired_summary(const ExperimentRun &leaky, const ExperimentRun &baseline);
nlohmann::json manifest_json(const std::vector<ExperimentRun> &runs);

/// Writes summary.json, manifest.json and per-run CSV tables into `dir`.
void write_outputs(const std::vector<ExperimentRun> &runs, const std::string &dir);

}  // namespace leaksim

#endif
