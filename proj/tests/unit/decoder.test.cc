#include "leaksim/decoder.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "leaksim/engine.h"
#include "leaksim/matching.h"

using namespace leaksim;

namespace {

/// Exhaustive maximum-weight matching; max_cardinality ranks by size first.
std::pair<int, int64_t> brute_matching(int n, const std::vector<WeightedEdge> &edges, bool max_cardinality) {
    std::pair<int, int64_t> best{0, 0};
    std::vector<char> used(n, 0);
    std::function<void(size_t, int, int64_t)> rec = [&](size_t k, int size, int64_t w) {
        if (k == edges.size()) {
            std::pair<int, int64_t> cand = max_cardinality ? std::pair{size, w} : std::pair{0, w};
            best = std::max(best, cand);
            return;
        }
        rec(k + 1, size, w);
        const auto &e = edges[k];
        if (!used[e.u] && !used[e.v]) {
            used[e.u] = used[e.v] = 1;
            rec(k + 1, size + 1, w + e.weight);
            used[e.u] = used[e.v] = 0;
        }
    };
    rec(0, 0, 0);
    return best;
}

std::pair<int, int64_t> score(const std::vector<int> &mate, const std::vector<WeightedEdge> &edges) {
    int size = 0;
    int64_t w = 0;
    for (const auto &e : edges) {
        if (mate[e.u] == e.v) {
            EXPECT_EQ(mate[e.v], e.u);
            size++;
            w += e.weight;
        }
    }
    return {size, w};
}

CodeOptions deterministic_options(size_t dim = 3) {
    CodeOptions opt;
    opt.flips_each_round = false;
    opt.random_initial_bits = false;
    opt.local_dim = dim;
    return opt;
}

/// Inserts an ideal X on `qudit` as the first op of round `round`.
Circuit with_x_error(Circuit c, int qudit, int round) {
    auto it = std::find_if(c.ops.begin(), c.ops.end(), [&](const Operation &op) { return op.round == round; });
    Operation op;
    op.kind = OpKind::unitary;
    op.name = "X";
    op.qudits = {qudit};
    op.channel = std::make_shared<KrausChannel>(KrausChannel::unitary(pauli_x(c.qudits[qudit].local_dim)));
    op.round = round;
    c.ops.insert(it, op);
    return c;
}

}  // namespace

TEST(matching, blossom_matches_brute_force_on_random_graphs) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 400; trial++) {
        int n = 2 + (int)(rng() % 9);
        std::vector<WeightedEdge> edges;
        for (int u = 0; u < n; u++) {
            for (int v = u + 1; v < n; v++) {
                if (rng() % 3 != 0) {
                    edges.push_back({u, v, (int64_t)(rng() % 20) + (trial % 2 ? 1 : -5)});
                }
            }
        }
        if (edges.size() > 18) {
            edges.resize(18);
        }
        for (bool maxcard : {false, true}) {
            auto mate = max_weight_matching(n, edges, maxcard);
            auto got = score(mate, edges);
            auto want = brute_matching(n, edges, maxcard);
            if (maxcard) {
                EXPECT_EQ(got, want) << "trial " << trial;
            } else {
                EXPECT_EQ(got.second, want.second) << "trial " << trial;
            }
        }
    }
}

TEST(matching, boundary_matching_matches_enumeration) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 10);
    for (int trial = 0; trial < 300; trial++) {
        int n = 1 + (int)(rng() % 12);
        std::vector<std::vector<double>> pair(n, std::vector<double>(n));
        std::vector<double> boundary(n);
        for (int i = 0; i < n; i++) {
            boundary[i] = u(rng);
            for (int j = i + 1; j < n; j++) {
                pair[i][j] = pair[j][i] = u(rng);
            }
        }
        auto fast = match_with_boundary(pair, boundary);
        auto slow = match_with_boundary_brute_force(pair, boundary);
        EXPECT_NEAR(fast.weight, slow.weight, 1e-4) << "n=" << n;
        for (int i = 0; i < n; i++) {
            if (fast.partner[i] >= 0) {
                EXPECT_EQ(fast.partner[fast.partner[i]], i);
            }
        }
    }
}

TEST(matching, empty_and_forced) {
    EXPECT_TRUE(match_with_boundary({}, {}).partner.empty());
    double inf = std::numeric_limits<double>::infinity();
    auto m = match_with_boundary({{0, 1}, {1, 0}}, {inf, inf});
    EXPECT_EQ(m.partner, (std::vector<int>{1, 0}));
    auto b = match_with_boundary({{0, 9}, {9, 0}}, {1, 1});
    EXPECT_EQ(b.partner, (std::vector<int>{-1, -1}));
    EXPECT_DOUBLE_EQ(b.weight, 2);
}

TEST(decoder, graphs_are_graphlike_and_positive) {
    std::vector<Circuit> circuits;
    circuits.push_back(build_repetition_code(3, 4, noise_preset("physical")));
    circuits.push_back(build_repetition_code(9, 2, noise_preset("physical")));
    circuits.push_back(build_surface_code(3, 3, noise_preset("thermal")));
    circuits.push_back(build_surface_code(5, 2, noise_preset("thermal")));
    for (const auto &c : circuits) {
        Decoder dec(c);
        for (int k = 1; k <= dec.max_rounds(); k++) {
            const auto &g = dec.graph(k);
            EXPECT_EQ(g.dropped_mechanisms, 0) << c.layout.code << " k=" << k;
            // Connectivity: every detector reaches the boundary.
            int nd = (int)g.detectors.size();
            std::vector<std::vector<int>> adj(nd + 1);
            for (const auto &e : g.edges) {
                EXPECT_GT(e.weight, 0);
                int b = e.b < 0 ? nd : e.b;
                adj[e.a].push_back(b);
                adj[b].push_back(e.a);
            }
            std::vector<char> seen(nd + 1, 0);
            std::vector<int> stack{nd};
            seen[nd] = 1;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int w : adj[v]) {
                    if (!seen[w]) {
                        seen[w] = 1;
                        stack.push_back(w);
                    }
                }
            }
            EXPECT_EQ(std::count(seen.begin(), seen.end(), 1), nd + 1);
        }
    }
    Decoder surface(circuits[2]);
    EXPECT_EQ(surface.graph(3).detectors.size(), 4u * 3 + 4);
}

TEST(decoder, pauli_frame_matches_simulation) {
    // Every single-qubit Pauli after every gate of a qubit-level repetition code, checked against
    // the state-vector engine. All outcomes are deterministic from the all-zero start.
    Circuit c = build_repetition_code(3, 2, noise_preset("noiseless"), deterministic_options(2));
    std::vector<int> raw;
    for (int r = 0; r < 2; r++) {
        raw.insert(raw.end(), c.layout.raw_measurements[r].begin(), c.layout.raw_measurements[r].end());
        raw.insert(raw.end(), c.layout.raw_snapshots[r].begin(), c.layout.raw_snapshots[r].end());
    }
    int checked = 0;
    for (size_t k = 0; k < c.ops.size(); k++) {
        const auto &op = c.ops[k];
        if (op.kind != OpKind::unitary && op.kind != OpKind::create_qudit) {
            continue;
        }
        for (int q : op.qudits) {
            for (int pauli : {1, 2, 3}) {
                bool x = pauli & 1, z = pauli & 2;
                auto predicted = propagate_pauli(c, k, q, x, z);
                Circuit faulty = c;
                Operation err;
                err.kind = OpKind::unitary;
                err.name = "fault";
                err.qudits = {q};
                ComplexMatrix m = ComplexMatrix::identity(2);
                if (x) {
                    m = pauli_x(2) * m;
                }
                if (z) {
                    m = ComplexMatrix::diagonal({1, -1}) * m;
                }
                err.channel = std::make_shared<KrausChannel>(KrausChannel::unitary(m));
                err.round = op.round;
                faulty.ops.insert(faulty.ops.begin() + k + 1, err);
                Engine e(faulty, program_order(faulty), {SimMode::qubit_only});
                auto rec = e.run(1, 0);
                for (int reg : raw) {
                    bool flipped = std::binary_search(predicted.begin(), predicted.end(), reg);
                    EXPECT_EQ(rec.registers[reg], flipped ? 1 : 0) << "op " << k << " pauli " << pauli;
                }
                checked++;
            }
        }
    }
    EXPECT_GT(checked, 60);
}

TEST(decoder, constant_outcomes_have_no_events) {
    Circuit c = build_repetition_code(5, 3, noise_preset("noiseless"));
    Decoder dec(c);
    Engine e(c, schedule(c), {SimMode::rpa});
    for (uint64_t shot = 0; shot < 10; shot++) {
        auto r = e.run(2, shot);
        for (int k = 1; k <= 3; k++) {
            EXPECT_TRUE(dec.detection_events(r.registers, k).empty());
            EXPECT_FALSE(dec.logical_error(r.registers, k));
        }
    }
    EXPECT_FALSE(dec.decode({}, 2).correction);
}

TEST(decoder, single_flip_gives_two_events) {
    Circuit clean = build_repetition_code(5, 3, noise_preset("noiseless"), deterministic_options());
    Decoder dec(clean);
    int d2 = clean.layout.data_qudits[2];
    Circuit c = with_x_error(clean, d2, 1);
    Engine e(c, program_order(c), {SimMode::exact3});
    auto r = e.run(1, 0);
    for (int k = 2; k <= 3; k++) {
        auto events = dec.detection_events(r.registers, k);
        ASSERT_EQ(events.size(), 2u);
        for (int ev : events) {
            const auto &det = dec.graph(k).detectors[ev];
            EXPECT_EQ(det.round, 1);
            EXPECT_TRUE(det.stabilizer == 1 || det.stabilizer == 2);
        }
        EXPECT_FALSE(dec.observable(r.registers, k));
        EXPECT_FALSE(dec.logical_error(r.registers, k));
    }
    // The logical qubit sits at the end of the chain: one event, corrected through the boundary.
    Circuit edge = with_x_error(clean, clean.layout.data_qudits[0], 1);
    Engine e0(edge, program_order(edge), {SimMode::exact3});
    auto r0 = e0.run(1, 0);
    EXPECT_EQ(dec.detection_events(r0.registers, 3).size(), 1u);
    EXPECT_TRUE(dec.observable(r0.registers, 3));
    EXPECT_TRUE(dec.decode(dec.detection_events(r0.registers, 3), 3).correction);
    EXPECT_FALSE(dec.logical_error(r0.registers, 3));
}

TEST(decoder, random_bits_and_flips_are_tracked) {
    Circuit c = build_repetition_code(3, 4, noise_preset("noiseless"));
    Decoder dec(c);
    Engine e(c, schedule(c), {SimMode::rpa});
    for (uint64_t shot = 0; shot < 32; shot++) {
        auto r = e.run(3, shot);
        for (int k = 1; k <= 4; k++) {
            EXPECT_TRUE(dec.detection_events(r.registers, k).empty());
            EXPECT_FALSE(dec.observable(r.registers, k));
        }
    }
}

TEST(decoder, adjacent_events_match_each_other) {
    Circuit c = build_repetition_code(3, 2, noise_preset("noiseless"));
    Decoder dec(c);
    const auto &g = dec.graph(2);
    std::vector<int> events;
    for (size_t i = 0; i < g.detectors.size(); i++) {
        if (g.detectors[i].round == 1 && !g.detectors[i].final) {
            events.push_back((int)i);
        }
    }
    ASSERT_EQ(events.size(), 2u);
    auto fast = dec.decode(events, 2);
    DecoderOptions brute;
    brute.method = MatchingMethod::brute_force;
    auto slow = Decoder(c, brute).decode(events, 2);
    EXPECT_FALSE(fast.correction);  // the middle data qubit is not on the logical cut
    EXPECT_EQ(fast.correction, slow.correction);
    EXPECT_NEAR(fast.weight, slow.weight, 1e-6);
}

TEST(decoder, blossom_equals_enumeration_on_random_events) {
    Circuit c = build_surface_code(3, 4, noise_preset("thermal"));
    Decoder fast(c);
    DecoderOptions opt;
    opt.method = MatchingMethod::brute_force;
    Decoder slow(c, opt);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; trial++) {
        int k = 1 + (int)(rng() % 4);
        int nd = (int)fast.graph(k).detectors.size();
        std::set<int> ev;
        int count = (int)(rng() % 13);
        while ((int)ev.size() < std::min(count, nd)) {
            ev.insert((int)(rng() % nd));
        }
        std::vector<int> events(ev.begin(), ev.end());
        auto a = fast.decode(events, k);
        auto b = slow.decode(events, k);
        EXPECT_NEAR(a.weight, b.weight, 1e-4);
        EXPECT_FALSE(b.greedy);
    }
}

TEST(decoder, greedy_fallback_is_flagged) {
    Circuit c = build_repetition_code(3, 10, noise_preset("noiseless"));
    DecoderOptions opt;
    opt.method = MatchingMethod::brute_force;
    opt.brute_force_limit = 4;
    Decoder dec(c, opt);
    std::vector<int> events{0, 1, 2, 3, 4, 5};
    EXPECT_TRUE(dec.decode(events, 10).greedy);
}

TEST(decoder, leaked_data_randomizes_neighbours) {
    CodeOptions opt = deterministic_options();
    opt.custom_data_index = 1;
    opt.custom_data_state = {0, 0, 1};
    int rounds = 4;
    Circuit c = build_repetition_code(3, rounds, noise_preset("noiseless"), opt);
    Decoder dec(c);
    Engine e(c, schedule(c), {SimMode::exact3});
    int n = 20000;
    std::vector<std::vector<int>> hits(2, std::vector<int>(rounds, 0));
    e.run_batch(8, 0, n, 1, [&](const TrajectoryRecord &r) {
        for (int s = 0; s < 2; s++) {
            for (int k = 1; k < rounds; k++) {
                hits[s][k] += dec.stabilizer_event(r.registers, s, k);
            }
        }
    });
    for (int s = 0; s < 2; s++) {
        for (int k = 1; k < rounds; k++) {
            EXPECT_NEAR(hits[s][k] / (double)n, 0.5, 3 * std::sqrt(0.25 / n)) << s << " " << k;
        }
    }
}

TEST(decoder, dem_text_export) {
    Circuit c = build_repetition_code(3, 2, noise_preset("noiseless"));
    Decoder dec(c);
    std::string text = dec.graph(2).to_text();
    size_t errors = 0, pos = 0;
    while ((pos = text.find("error(", pos)) != std::string::npos) {
        errors++;
        pos++;
    }
    EXPECT_EQ(errors, dec.graph(2).edges.size());
    EXPECT_NE(text.find("L0"), std::string::npos);
    EXPECT_NE(text.find("detector(0, 0) D0"), std::string::npos);
}

TEST(decoder, robust_to_p_dem) {
    NoiseModel noise = noise_preset("thermal");
    Circuit c = build_surface_code(3, 3, noise, deterministic_options(2));
    Engine e(c, schedule(c), {SimMode::qubit_only});
    std::vector<std::vector<int8_t>> records;
    e.run_batch(12, 0, 20000, 1, [&](const TrajectoryRecord &r) { records.push_back(r.registers); });
    std::vector<double> ler;
    for (double p : {5e-4, 1e-3, 2e-3}) {
        DecoderOptions opt;
        opt.p_dem = p;
        Decoder dec(c, opt);
        int fails = 0;
        for (const auto &r : records) {
            fails += dec.logical_error(r, 3);
        }
        ler.push_back(fails / (double)records.size());
    }
    EXPECT_GT(ler[1], 0);
    EXPECT_LT(std::abs(ler[0] - ler[1]) / ler[1], 0.1);
    EXPECT_LT(std::abs(ler[2] - ler[1]) / ler[1], 0.1);
}
