#include "leaksim/experiment.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace leaksim;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir(const std::string &name) {
    auto p = std::filesystem::temp_directory_path() / ("leaksim_" + name);
    std::filesystem::remove_all(p);
    return p;
}

json small_pair() {
    return json::parse(R"({
        "defaults": {"code": "repetition", "distance": 3, "rounds": 6, "noise": "thermal", "mode": "rpa",
                     "shots": 400, "seed": 21, "jackknife_blocks": 8},
        "experiments": [{"name": "leaky"}, {"name": "base", "noise": {"leak_free": true}}]
    })");
}

}  // namespace

TEST(experiment, config_parsing_and_defaults) {
    auto c = config_from_json(json::parse(R"({"code": "surface", "distance": 3, "rounds": 4, "noise": "coherent",
        "mode": "exact3", "shots": 10, "p_dem": 0.002, "fit": {"k_min": 2}, "phi": 0.5})"));
    EXPECT_EQ(c.code, "surface");
    EXPECT_EQ(c.mode, SimMode::exact3);
    EXPECT_EQ(c.noise.cz.p, noise_preset("coherent").cz.p);
    EXPECT_EQ(c.noise.cz.phi, 0.5);
    EXPECT_EQ(c.decoder.p_dem, 0.002);
    EXPECT_EQ(c.fit.k_min, 2);
    EXPECT_EQ(c.fit.k_max, 0);

    auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    c.seed++;
    EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(experiment, config_errors_name_the_field) {
    auto message = [](const std::string &text) {
        try {
            batch_from_json(json::parse(text));
        } catch (const ConfigError &e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_EQ(message(R"({"shots": 0})").rfind("config.shots", 0), 0u);
    EXPECT_EQ(message(R"({"code": "color"})").rfind("config.code", 0), 0u);
    EXPECT_EQ(message(R"({"bogus": 1})").rfind("config.bogus", 0), 0u);
    EXPECT_EQ(message(R"({"noise": {"decoherence": {"T1": -1}}})").rfind("config.noise", 0), 0u);
    EXPECT_EQ(message(R"({"noise": "nonexistent"})").rfind("config.noise", 0), 0u);
    EXPECT_EQ(message(R"({"mode": "qubit-only", "noise": "thermal"})").rfind("config.mode", 0), 0u);
    EXPECT_EQ(message(R"({"experiments": [{"rounds": "x"}]})").rfind("experiments[0].rounds", 0), 0u);
    EXPECT_EQ(message(R"({"experiments": [{}, {}]})").rfind("experiments[1].name", 0), 0u);
    EXPECT_EQ(message(R"({"experiments": []})").rfind("experiments", 0), 0u);
}

TEST(experiment, per_qudit_noise_survives_the_manifest) {
    auto c = config_from_json(json::parse(R"({"code": "surface", "noise": {"preset": "coherent",
        "qudit_decoherence": {"d1_1": {"T_h": 400}}}})"));
    EXPECT_EQ(c.noise.decoherence_of("d1_1").T_h, 400);
    auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(back.noise.qudit_deco, c.noise.qudit_deco);
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(experiment, batch_defaults_and_leak_free_baseline) {
    auto configs = batch_from_json(small_pair());
    ASSERT_EQ(configs.size(), 2u);
    EXPECT_EQ(configs[0].noise.deco, noise_preset("thermal").deco);
    EXPECT_EQ(configs[1].noise.deco, leak_free(noise_preset("thermal")).deco);
    EXPECT_EQ(configs[1].seed, 21u);
    EXPECT_EQ(configs[1].rounds, 6);
}

TEST(experiment, qubit_only_smoke_run) {
    auto c = config_from_json(json::parse(R"({"code": "repetition", "distance": 3, "rounds": 10,
        "noise": {"preset": "thermal", "leak_free": true}, "mode": "qubit-only", "shots": 10000, "seed": 4})"));
    auto run = run_experiment(c);
    EXPECT_EQ(run.stats.shots(), 10000u);
    EXPECT_EQ(run.stats.aborted(), 0u);
    auto s = run_summary(run);
    ASSERT_FALSE(s["fit"].is_null());
    EXPECT_GT(s["fit"]["eps"].get<double>(), 0);
    EXPECT_GT(s["fit"]["eps_err"].get<double>(), 0);
    EXPECT_LT(s["fit"]["eps"].get<double>(), 0.05);
    EXPECT_LE(run.peak_alive, 4);
    EXPECT_LE(run.peak_vector_length, size_t(1) << run.peak_alive);
}

TEST(experiment, outputs_are_reproducible_across_workers_and_from_manifest) {
    auto configs = batch_from_json(small_pair());
    auto dump = [](const ExperimentConfig &c, int workers, std::string &text) {
        ExperimentConfig w = c;
        w.workers = workers;
        RunHooks hooks;
        hooks.on_record = [&](const TrajectoryRecord &r) { text += record_to_json(r).dump() + "\n"; };
        return run_experiment(w, hooks);
    };
    std::string d1, d3;
    std::vector<ExperimentRun> a, b;
    for (const auto &c : configs) {
        a.push_back(dump(c, 1, d1));
        b.push_back(dump(c, 3, d3));
    }
    EXPECT_EQ(d1, d3);

    auto dir_a = temp_dir("exp_a"), dir_b = temp_dir("exp_b"), dir_c = temp_dir("exp_c");
    write_outputs(a, dir_a);
    write_outputs(b, dir_b);
    auto manifest = json::parse(slurp(dir_a / "manifest.json"));
    std::vector<ExperimentRun> c;
    for (const auto &cfg : batch_from_json(manifest)) {
        c.push_back(run_experiment(cfg));
    }
    write_outputs(c, dir_c);
    for (const char *f : {"leaky.logical.csv", "leaky.def.csv", "leaky.p2.csv", "base.logical.csv", "base.def.csv",
                          "base.p2.csv", "added_def.csv"}) {
        std::string ref = slurp(dir_a / f);
        EXPECT_FALSE(ref.empty()) << f;
        EXPECT_EQ(ref, slurp(dir_b / f)) << f;
        EXPECT_EQ(ref, slurp(dir_c / f)) << f;
    }

    EXPECT_EQ(manifest["manifest"]["runs"][0]["config_hash"].get<std::string>().size(), 16u);
    EXPECT_EQ(manifest["manifest"]["runs"][0]["scheduler"]["peak_alive"], 4);
    auto summary = json::parse(slurp(dir_a / "summary.json"));
    ASSERT_TRUE(summary.contains("paired"));
    EXPECT_TRUE(summary["paired"]["added_ler"].contains("paired_err"));
    EXPECT_EQ(summary["paired"]["added_logical_curve"].size(), 6u);
    EXPECT_TRUE(summary["paired"]["added_def_long_time_mean"].is_number());
}
