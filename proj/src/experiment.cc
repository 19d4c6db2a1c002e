#include "leaksim/experiment.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace leaksim {

const char *const kVersion = "0.1.0";

namespace {

using nlohmann::json;

template <class T>
T field(const json &j, const std::string &key, const std::string &path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

NoiseModel parse_noise(const json &j, const std::string &path, std::string &preset) {
    try {
        if (j.is_string()) {
            preset = j.get<std::string>();
            return noise_preset(preset);
        }
        if (!j.is_object()) throw ConfigError(path + ": expected a preset name or an object");
        preset = j.value("preset", std::string("noiseless"));
        NoiseModel base = noise_preset(preset);
        json overrides = j;
        bool no_leak = false;
        if (overrides.contains("leak_free")) {
            no_leak = overrides["leak_free"].get<bool>();
            overrides.erase("leak_free");
        }
        NoiseModel m = noise_from_json(overrides, base);
        return no_leak ? leak_free(m) : m;
    } catch (const ConfigError &) {
        throw;
    } catch (const std::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

bool has_leakage(const NoiseModel &m) {
    for (const auto &[name, d] : m.qudit_deco)
        if (std::isfinite(d.T_h)) return true;
    return std::isfinite(m.deco.T_h) || m.cz.p > 0;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

void write_file(const std::filesystem::path &p, const std::string &text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

}  // namespace

ExperimentConfig config_from_json(const json &j, const std::string &path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    static const std::set<std::string> known{
        "name",   "code",         "distance", "rounds",           "noise",           "mode",
        "shots",  "seed",         "first_shot", "workers",        "p_dem",           "decode_types",
        "fit",    "flips_each_round", "random_initial_bits", "phi", "jackknife_blocks", "def_from_round"};
    for (const auto &[key, v] : j.items())
        if (!known.count(key)) throw ConfigError(path + "." + key + ": unknown field");

    ExperimentConfig c;
    c.name = field(j, "name", path, c.name);
    c.code = field(j, "code", path, c.code);
    if (c.code != "repetition" && c.code != "surface")
        throw ConfigError(path + ".code: expected repetition or surface");
    c.distance = field(j, "distance", path, c.distance);
    if (c.distance < 2 || (c.code == "surface" && c.distance % 2 == 0))
        throw ConfigError(path + ".distance: invalid distance " + std::to_string(c.distance));
    c.rounds = field(j, "rounds", path, c.rounds);
    if (c.rounds < 1) throw ConfigError(path + ".rounds: must be >= 1");
    if (j.contains("noise")) c.noise = parse_noise(j["noise"], path + ".noise", c.preset);
    try {
        if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
    } catch (const std::exception &e) {
        throw ConfigError(path + ".mode: " + e.what());
    }
    auto shots = field<int64_t>(j, "shots", path, (int64_t)c.shots);
    if (shots < 1) throw ConfigError(path + ".shots: must be >= 1");
    c.shots = (uint64_t)shots;
    c.seed = field<uint64_t>(j, "seed", path, c.seed);
    c.first_shot = field<uint64_t>(j, "first_shot", path, c.first_shot);
    c.workers = field(j, "workers", path, c.workers);
    if (c.workers < 1) throw ConfigError(path + ".workers: must be >= 1");
    c.decoder.p_dem = field(j, "p_dem", path, c.decoder.p_dem);
    if (!(c.decoder.p_dem > 0 && c.decoder.p_dem < 0.5)) throw ConfigError(path + ".p_dem: must be in (0, 0.5)");
    c.decoder.types = field(j, "decode_types", path, c.decoder.types);
    if (j.contains("fit")) {
        const auto &f = j["fit"];
        if (!f.is_object()) throw ConfigError(path + ".fit: expected an object");
        c.fit.k_min = field(f, "k_min", path + ".fit", c.fit.k_min);
        c.fit.k_max = field(f, "k_max", path + ".fit", c.fit.k_max);
    }
    c.flips_each_round = field(j, "flips_each_round", path, c.flips_each_round);
    c.random_initial_bits = field(j, "random_initial_bits", path, c.random_initial_bits);
    if (j.contains("phi") && !j["phi"].is_null()) c.phi = field(j, "phi", path, c.phi);
    c.jackknife_blocks = field(j, "jackknife_blocks", path, c.jackknife_blocks);
    if (c.jackknife_blocks < 1) throw ConfigError(path + ".jackknife_blocks: must be >= 1");
    c.def_from_round = field(j, "def_from_round", path, c.def_from_round);
    if (std::isfinite(c.phi)) c.noise.cz.phi = c.phi;
    if (c.mode == SimMode::qubit_only && has_leakage(c.noise))
        throw ConfigError(path + ".mode: qubit-only needs a leak-free noise model (set noise.leak_free)");
    return c;
}

json config_to_json(const ExperimentConfig &c) {
    json noise = noise_to_json(c.noise);
    noise["preset"] = c.preset;
    json j{{"name", c.name},
           {"code", c.code},
           {"distance", c.distance},
           {"rounds", c.rounds},
           {"noise", noise},
           {"mode", mode_name(c.mode)},
           {"shots", c.shots},
           {"seed", c.seed},
           {"first_shot", c.first_shot},
           {"workers", c.workers},
           {"p_dem", c.decoder.p_dem},
           {"decode_types", c.decoder.types},
           {"fit", {{"k_min", c.fit.k_min}, {"k_max", c.fit.k_max}}},
           {"flips_each_round", c.flips_each_round},
           {"random_initial_bits", c.random_initial_bits},
           {"jackknife_blocks", c.jackknife_blocks},
           {"def_from_round", c.def_from_round}};
    if (std::isfinite(c.phi)) j["phi"] = c.phi;
    return j;
}

std::vector<ExperimentConfig> batch_from_json(const json &j) {
    if (!j.is_object()) throw ConfigError("config: expected an object");
    if (!j.contains("experiments")) return {config_from_json(j)};
    const auto &list = j["experiments"];
    if (!list.is_array() || list.empty() || list.size() > 2)
        throw ConfigError("experiments: expected an array of one or two entries");
    auto noise_object = [](json e) {
        if (e.contains("noise") && e["noise"].is_string()) e["noise"] = {{"preset", e["noise"]}};
        return e;
    };
    json defaults = noise_object(j.value("defaults", json::object()));
    for (const auto &[key, v] : j.items())
        if (key != "experiments" && key != "defaults" && key != "manifest")
            throw ConfigError(key + ": unknown field");
    std::vector<ExperimentConfig> out;
    for (size_t i = 0; i < list.size(); ++i) {
        json merged = defaults;
        if (!list[i].is_object()) throw ConfigError("experiments[" + std::to_string(i) + "]: expected an object");
        merged.merge_patch(noise_object(list[i]));
        out.push_back(config_from_json(merged, "experiments[" + std::to_string(i) + "]"));
    }
    if (out.size() == 2 && out[0].name == out[1].name)
        throw ConfigError("experiments[1].name: must differ from experiments[0].name");
    return out;
}

uint64_t config_hash(const ExperimentConfig &config) {
    std::string s = config_to_json(config).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

Circuit build_circuit(const ExperimentConfig &config) {
    CodeOptions opt;
    opt.local_dim = config.mode == SimMode::qubit_only ? 2 : 3;
    opt.flips_each_round = config.flips_each_round;
    opt.random_initial_bits = config.random_initial_bits;
    if (config.code == "surface") return build_surface_code(config.distance, config.rounds, config.noise, opt);
    return build_repetition_code(config.distance, config.rounds, config.noise, opt);
}

ExperimentRun run_experiment(const ExperimentConfig &config, const RunHooks &hooks) {
    Circuit circuit = build_circuit(config);
    Schedule sched = schedule(circuit);
    ExperimentRun run{config, circuit, sched, ShotStatistics(circuit.layout, config.jackknife_blocks)};
    Decoder decoder(circuit, config.decoder);
    Engine engine(circuit, sched, {config.mode});

    auto start = std::chrono::steady_clock::now();
    auto last = start;
    uint64_t done = 0;
    engine.run_batch(config.seed, config.first_shot, config.shots, config.workers, [&](const TrajectoryRecord &r) {
        run.stats.add(r, &decoder);
        run.peak_vector_length = std::max(run.peak_vector_length, r.peak_vector_length);
        run.peak_alive = std::max(run.peak_alive, r.peak_alive);
        if (hooks.on_record) hooks.on_record(r);
        ++done;
        auto now = std::chrono::steady_clock::now();
        if (hooks.log && (std::chrono::duration<double>(now - last).count() > 10 || done == config.shots)) {
            double t = std::chrono::duration<double>(now - start).count();
            *hooks.log << config.name << ": " << done << "/" << config.shots << " shots, "
                       << (t > 0 ? done / t : 0.0) << " shots/s\n";
            last = now;
        }
    });
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

json run_summary(const ExperimentRun &run) {
    const auto &c = run.config;
    const auto &s = run.stats;
    auto curve = s.logical_curve();
    json j{{"name", c.name},
           {"code", c.code},
           {"distance", c.distance},
           {"rounds", c.rounds},
           {"mode", mode_name(c.mode)},
           {"noise", c.noise.name},
           {"shots", s.shots()},
           {"aborted", s.aborted()},
           {"greedy_decodes", s.greedy_decodes()},
           {"seconds", run.seconds},
           {"shots_per_second", run.seconds > 0 ? s.shots() / run.seconds : 0.0},
           {"logical", {{"round", curve.rounds}, {"P_L", curve.p}, {"stderr", curve.stderr_}}}};
    try {
        j["fit"] = fit_to_json(fit_logical_error(curve, c.fit));
    } catch (const std::invalid_argument &e) {
        j["fit"] = nullptr;
        j["fit_error"] = e.what();
    }
    int from = c.def_from_round >= 0 ? c.def_from_round : c.rounds / 2;
    j["def_long_time_mean"] = long_time_mean(s.def(), from);
    j["def_from_round"] = from;
    j["p2_average"] = s.p2_average();
    j["p2_average_stderr"] = s.p2_average_stderr();
    return j;
}

json paired_summary(const ExperimentRun &leaky, const ExperimentRun &baseline) {
    json j{{"leaky", leaky.config.name}, {"baseline", baseline.config.name}};
    try {
        auto added = added_logical_error(leaky.stats, baseline.stats, leaky.config.fit);
        j["added_ler"] = {{"value", added.value},
                          {"unpaired_err", added.unpaired_err},
                          {"paired_err", added.paired_err}};
    } catch (const std::invalid_argument &e) {
        j["added_ler"] = nullptr;
        j["added_ler_error"] = e.what();
    }
    j["added_logical_curve"] = added_logical_curve(leaky.stats, baseline.stats);
    int from = leaky.config.def_from_round >= 0 ? leaky.config.def_from_round : leaky.config.rounds / 2;
    try {
        j["added_def_long_time_mean"] = long_time_mean(table_difference(leaky.stats.def(), baseline.stats.def()), from);
    } catch (const std::invalid_argument &e) {
        j["added_def_long_time_mean"] = nullptr;
    }
    return j;
}

json manifest_json(const std::vector<ExperimentRun> &runs) {
    json experiments = json::array(), details = json::array();
    for (const auto &r : runs) {
        experiments.push_back(config_to_json(r.config));
        details.push_back({{"name", r.config.name},
                           {"config_hash", hex64(config_hash(r.config))},
                           {"seed", r.config.seed},
                           {"scheduler",
                            {{"peak_alive", r.schedule.peak_alive},
                             {"peak_measure_alive", r.schedule.peak_measure_alive},
                             {"dropped_lifetime_edges", r.schedule.dropped_lifetime_edges}}},
                           {"engine", {{"peak_alive", r.peak_alive}, {"peak_vector_length", r.peak_vector_length}}}});
    }
    return {{"experiments", experiments},
            {"manifest",
             {{"leaksim", kVersion},
              {"compiler", __VERSION__},
              {"json",
               std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"runs", details}}}};
}

void write_outputs(const std::vector<ExperimentRun> &runs, const std::string &dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json summary{{"experiments", json::array()}};
    for (const auto &r : runs) {
        summary["experiments"].push_back(run_summary(r));
        std::string base = (fs::path(dir) / r.config.name).string();
        write_file(base + ".logical.csv", logical_csv(r.stats.logical_curve()));
        write_file(base + ".def.csv", def_csv(r.stats.def(), r.circuit.layout));
        write_file(base + ".p2.csv", p2_csv(r.stats, r.circuit));
    }
    if (runs.size() == 2) {
        summary["paired"] = paired_summary(runs[0], runs[1]);
        if (runs[0].stats.def().size() == runs[1].stats.def().size())
            write_file(fs::path(dir) / "added_def.csv",
                       def_csv(table_difference(runs[0].stats.def(), runs[1].stats.def()), runs[0].circuit.layout));
    }
    write_file(fs::path(dir) / "summary.json", summary.dump(2) + "\n");
    write_file(fs::path(dir) / "manifest.json", manifest_json(runs).dump(2) + "\n");
}

}  // namespace leaksim
