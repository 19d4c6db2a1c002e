#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "leaksim/experiment.h"

using namespace leaksim;
using nlohmann::json;

namespace {

json load_json(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open");
    try {
        return json::parse(f);
    } catch (const json::parse_error &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Trajectory simulation of leakage in repetition and surface code memory experiments"};
    std::string config_path, out_dir = "results", dump_path, mode;
    std::optional<int64_t> shots;
    std::optional<uint64_t> seed;
    std::optional<int> workers;
    app.add_option("--config", config_path, "Experiment, batch or manifest JSON")->required();
    app.add_option("--shots", shots, "Override the number of shots");
    app.add_option("--seed", seed, "Override the seed");
    app.add_option("--mode", mode, "Override the simulation mode (exact3, rpa, qubit-only)");
    app.add_option("--workers", workers, "Worker threads");
    app.add_option("--dump-records", dump_path, "Write every trajectory record as NDJSON");
    app.add_option("--out-dir", out_dir, "Output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<ExperimentConfig> configs;
    try {
        json j = load_json(config_path);
        auto override_entry = [&](json &e) {
            if (shots) e["shots"] = *shots;
            if (seed) e["seed"] = *seed;
            if (!mode.empty()) e["mode"] = mode;
            if (workers) e["workers"] = *workers;
        };
        if (j.is_object() && j.contains("experiments") && j["experiments"].is_array()) {
            for (auto &e : j["experiments"]) override_entry(e);
        } else {
            override_entry(j);
        }
        configs = batch_from_json(j);
        for (size_t i = 0; i < configs.size(); i++) {
            try {
                build_circuit(configs[i]);
            } catch (const std::invalid_argument &e) {
                throw ConfigError("experiments[" + std::to_string(i) + "]: " + e.what());
            }
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::ofstream dump;
        if (!dump_path.empty()) {
            dump.open(dump_path, std::ios::binary);
            if (!dump) {
                std::cerr << "cannot write " << dump_path << "\n";
                return 3;
            }
        }
        std::vector<ExperimentRun> runs;
        for (const auto &c : configs) {
            RunHooks hooks;
            hooks.log = &std::cerr;
            if (dump.is_open()) {
                hooks.on_record = [&](const TrajectoryRecord &r) {
                    json line = record_to_json(r);
                    line["experiment"] = c.name;
                    dump << line.dump() << "\n";
                };
            }
            runs.push_back(run_experiment(c, hooks));
            const auto &s = runs.back().stats;
            if (s.aborted() > 0) std::cerr << c.name << ": " << s.aborted() << " aborted trajectories\n";
            if (s.shots() == 0) throw std::runtime_error(c.name + ": every trajectory aborted");
        }
        write_outputs(runs, out_dir);
        for (const auto &run : runs) {
            json e = run_summary(run);
            std::cout << e["name"].get<std::string>() << ": ";
            if (e["fit"].is_null())
                std::cout << "no fit (" << e.value("fit_error", "") << ")\n";
            else
                std::cout << "eps_L = " << e["fit"]["eps"] << " +- " << e["fit"]["eps_err"] << ", A = " << e["fit"]["A"]
                          << "\n";
        }
        json paired = runs.size() == 2 ? paired_summary(runs[0], runs[1]) : json();
        if (paired.is_object() && !paired["added_ler"].is_null()) {
            const auto &a = paired["added_ler"];
            std::cout << "added eps_L = " << a["value"] << " +- " << a["paired_err"] << " (paired), "
                      << a["unpaired_err"] << " (unpaired)\n";
        }
        std::cout << "results written to " << out_dir << "\n";
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
