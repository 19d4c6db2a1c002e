#include "leaksim/engine.h"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>

#include "leaksim/rpa.h"
#include "test_util.h"

using namespace leaksim;

namespace {

std::shared_ptr<KrausChannel> prep(std::vector<cplx> psi) {
    return std::make_shared<KrausChannel>(KrausChannel::make({ComplexMatrix::column(psi)}));
}

Operation op_of(OpKind kind, std::vector<int> qudits, std::shared_ptr<const KrausChannel> ch = nullptr,
                std::vector<int> regs = {}) {
    Operation op;
    op.kind = kind;
    op.qudits = std::move(qudits);
    op.channel = std::move(ch);
    op.registers = std::move(regs);
    return op;
}

/// One qutrit prepared in `psi`, one channel, one destructive measurement.
Circuit single_qutrit(std::vector<cplx> psi, const KrausChannel &ch) {
    Circuit c;
    int q = c.add_qudit("q", QuditRole::data);
    int r = c.add_register("out");
    c.ops.push_back(op_of(OpKind::create_qudit, {q}, prep(psi)));
    c.ops.push_back(op_of(OpKind::channel, {q}, std::make_shared<KrausChannel>(ch)));
    c.ops.push_back(op_of(OpKind::destroy_measure, {q}, nullptr, {r}));
    return c;
}

std::map<std::vector<int>, int> histogram(const Engine &e, int shots, uint64_t seed, const std::vector<int> &regs) {
    std::map<std::vector<int>, int> h;
    e.run_batch(seed, 0, shots, 1, [&](const TrajectoryRecord &r) {
        ASSERT_FALSE(r.aborted) << r.abort_reason;
        std::vector<int> key;
        for (int g : regs) {
            key.push_back(r.registers[g]);
        }
        h[key]++;
    });
    return h;
}

/// Two-sample chi-squared p-value for equal-size samples.
double two_sample_p(const std::map<std::vector<int>, int> &a, const std::map<std::vector<int>, int> &b) {
    std::map<std::vector<int>, std::pair<int, int>> joint;
    for (const auto &[k, n] : a) {
        joint[k].first = n;
    }
    for (const auto &[k, n] : b) {
        joint[k].second = n;
    }
    double chi2 = 0;
    int dof = -1;
    for (const auto &[k, n] : joint) {
        double s = n.first + n.second;
        chi2 += (n.first - n.second) * (double)(n.first - n.second) / s;
        dof++;
    }
    if (dof <= 0) {
        return 1;
    }
    return 1 - boost::math::cdf(boost::math::chi_squared(dof), chi2);
}

/// Exact outcome distribution of: |00>, U on qudit 0, E on both, measure both. Optionally dephases
/// into the c/2 blocks after every step (the incoherent reference).
std::vector<double> density_oracle(const ComplexMatrix &u, const KrausChannel &e, bool dephase_steps) {
    size_t d = 9;
    ComplexMatrix rho(d, d);
    rho(0, 0) = 1;
    auto dephase_blocks = [&](ComplexMatrix m) {
        for (size_t i = 0; i < d; i++) {
            for (size_t j = 0; j < d; j++) {
                bool same = ((i / 3) == 2) == ((j / 3) == 2) && ((i % 3) == 2) == ((j % 3) == 2);
                if (!same) {
                    m(i, j) = 0;
                }
            }
        }
        return m;
    };
    ComplexMatrix big = kron(u, ComplexMatrix::identity(3));
    rho = big * rho * big.adjoint();
    if (dephase_steps) {
        rho = dephase_blocks(rho);
    }
    ComplexMatrix next(d, d);
    for (const auto &k : e.kraus) {
        next += k * rho * k.adjoint();
    }
    std::vector<double> p(d);
    for (size_t i = 0; i < d; i++) {
        p[i] = next(i, i).real();
    }
    return p;
}

}  // namespace

TEST(engine, noiseless_repetition_all_zero) {
    CodeOptions opt;
    opt.flips_each_round = false;
    opt.random_initial_bits = false;
    Circuit c = build_repetition_code(3, 3, noise_preset("noiseless"), opt);
    for (SimMode mode : {SimMode::exact3, SimMode::rpa}) {
        Engine e(c, schedule(c), {mode});
        for (uint64_t shot = 0; shot < 20; shot++) {
            auto r = e.run(7, shot);
            ASSERT_FALSE(r.aborted);
            for (const auto &round : c.layout.raw_measurements) {
                for (int reg : round) {
                    EXPECT_EQ(r.registers[reg], 0);
                }
            }
            for (int reg : c.layout.raw_snapshots.back()) {
                EXPECT_EQ(r.registers[reg], 0);
            }
        }
    }
}

TEST(engine, noiseless_codes_have_no_detection_events) {
    for (bool surface : {false, true}) {
        Circuit c = surface ? build_surface_code(3, 3, noise_preset("noiseless"))
                            : build_repetition_code(5, 3, noise_preset("noiseless"));
        Engine e(c, schedule(c), {SimMode::rpa});
        const auto &l = c.layout;
        for (uint64_t shot = 0; shot < 10; shot++) {
            auto r = e.run(3, shot);
            for (size_t s = 0; s < l.stabilizers.size(); s++) {
                for (int k = 1; k < l.rounds; k++) {
                    EXPECT_EQ(r.registers[l.measurements[k][s]], r.registers[l.measurements[k - 1][s]]);
                }
                if (l.stabilizers[s].type == 'Z' && surface) {
                    EXPECT_EQ(r.registers[l.measurements[0][s]], 0);
                }
            }
        }
    }
}

TEST(engine, leak_channel_frequency) {
    double q = 0.3;
    ComplexMatrix k0 = ComplexMatrix::diagonal({1, std::sqrt(1 - q), 1});
    ComplexMatrix k1 = ComplexMatrix::outer(3, 2, 1, std::sqrt(q));
    Circuit c = single_qutrit({0, 1, 0}, KrausChannel::make({k0, k1}));
    int n = 100000;
    for (SimMode mode : {SimMode::exact3, SimMode::rpa}) {
        Engine e(c, schedule(c), {mode});
        auto h = histogram(e, n, 11, {0});
        double f = h[{2}] / (double)n;
        EXPECT_NEAR(f, q, 3 * std::sqrt(q * (1 - q) / n));
        EXPECT_EQ(h[{2}] + h[{1}], n);
    }
}

TEST(engine, measurement_of_superposition) {
    double r = std::sqrt(0.5);
    Circuit c = single_qutrit({r, r, 0}, KrausChannel::identity(3));
    int n = 100000;
    Engine e(c, schedule(c), {SimMode::exact3});
    auto h = histogram(e, n, 5, {0});
    EXPECT_NEAR(h[{0}] / (double)n, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(engine, destructive_measurement_shrinks_vector) {
    Circuit c;
    auto zero = prep({1, 0, 0});
    for (int k = 0; k < 3; k++) {
        c.add_qudit("q" + std::to_string(k), QuditRole::data);
        c.add_register("r" + std::to_string(k));
        c.ops.push_back(op_of(OpKind::create_qudit, {k}, zero));
    }
    c.ops.push_back(op_of(OpKind::destroy_measure, {1}, nullptr, {1}));
    c.ops.push_back(op_of(OpKind::destroy_measure, {0}, nullptr, {0}));
    c.ops.push_back(op_of(OpKind::create_qudit, {1}, zero));
    Engine exact(c, program_order(c), {SimMode::exact3});
    auto r = exact.run(1, 0);
    EXPECT_EQ(r.peak_vector_length, 27u);
    EXPECT_EQ(r.peak_alive, 3);
    Engine rpa(c, program_order(c), {SimMode::rpa});
    EXPECT_EQ(rpa.run(1, 0).peak_vector_length, 8u);
}

TEST(engine, small_circuit_matches_density_matrix) {
    std::mt19937_64 rng(21);
    ComplexMatrix u = leaksim::testing::random_unitary(rng, 3);
    KrausChannel ch = leaksim::testing::random_channel(rng, 9, 9, 3);
    Circuit c;
    int a = c.add_qudit("a", QuditRole::data);
    int b = c.add_qudit("b", QuditRole::data);
    c.add_register("ra");
    c.add_register("rb");
    auto zero = prep({1, 0, 0});
    c.ops.push_back(op_of(OpKind::create_qudit, {a}, zero));
    c.ops.push_back(op_of(OpKind::create_qudit, {b}, zero));
    c.ops.push_back(op_of(OpKind::unitary, {a}, std::make_shared<KrausChannel>(KrausChannel::unitary(u))));
    c.ops.push_back(op_of(OpKind::channel, {a, b}, std::make_shared<KrausChannel>(ch)));
    c.ops.push_back(op_of(OpKind::destroy_measure, {a}, nullptr, {0}));
    c.ops.push_back(op_of(OpKind::destroy_measure, {b}, nullptr, {1}));
    int n = 1000000;
    for (SimMode mode : {SimMode::exact3, SimMode::rpa}) {
        for (bool fuse : {false, true}) {
            Engine e(c, schedule(c), {mode, fuse});
            auto p = density_oracle(u, ch, mode == SimMode::rpa);
            auto h = histogram(e, n, 99, {0, 1});
            double tvd = 0;
            for (size_t i = 0; i < 9; i++) {
                int count = h.count({(int)i / 3, (int)i % 3}) ? h[{(int)i / 3, (int)i % 3}] : 0;
                tvd += std::abs(count / (double)n - p[i]) / 2;
            }
            EXPECT_LT(tvd, 0.005) << mode_name(mode) << " fuse=" << fuse;
        }
    }
}

TEST(engine, classical_functions) {
    Circuit c;
    int a = c.add_register("a");
    int b = c.add_register("b");
    int x = c.add_register("x");
    int y = c.add_register("y");
    auto push = [&](ClassicalFunction f) {
        Operation op;
        op.kind = OpKind::classical_fn;
        op.function = std::make_shared<ClassicalFunction>(f);
        c.ops.push_back(op);
    };
    push(ClassicalFunction::coin(a));
    push(ClassicalFunction::copy(a, b));
    ClassicalFunction two;
    two.outputs = {x};
    two.branches.push_back({1, {{{}, {2}}}});
    push(two);
    push(ClassicalFunction::randomize_leaked(x, y));
    Engine e(c, program_order(c), {SimMode::rpa});
    int n = 100000, ones = 0, y_ones = 0;
    e.run_batch(4, 0, n, 1, [&](const TrajectoryRecord &r) {
        EXPECT_EQ(r.registers[a], r.registers[b]);
        EXPECT_EQ(r.registers[x], 2);
        ones += r.registers[a];
        y_ones += r.registers[y];
    });
    EXPECT_NEAR(ones / (double)n, 0.5, 3 * std::sqrt(0.25 / n));
    EXPECT_NEAR(y_ones / (double)n, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(engine, undefined_classical_input_aborts) {
    Circuit c;
    int a = c.add_register("a");
    int b = c.add_register("b");
    ClassicalFunction f;
    f.inputs = {a};
    f.outputs = {b};
    f.branches.push_back({1, {{{1}, {1}}}});
    Operation op;
    op.kind = OpKind::classical_fn;
    op.function = std::make_shared<ClassicalFunction>(f);
    c.ops.push_back(op);
    Engine e(c, program_order(c), {SimMode::rpa});
    auto r = e.run(0, 0);
    EXPECT_TRUE(r.aborted);
}

TEST(engine, probes) {
    CodeOptions opt;
    opt.flips_each_round = false;
    opt.random_initial_bits = false;
    opt.custom_data_index = 1;
    double s = std::sqrt(0.5);
    opt.custom_data_state = {s, 0, s};
    Circuit c = build_repetition_code(3, 1, noise_preset("noiseless"), opt);
    int slot = c.layout.leak_probes[0][1];
    // Stabilizer outcomes depend on the leaked component, so single trajectories are conditioned.
    int n = 20000;
    for (SimMode mode : {SimMode::exact3, SimMode::rpa}) {
        Engine e(c, schedule(c), {mode});
        double mean = 0;
        e.run_batch(2, 0, n, 1, [&](const TrajectoryRecord &r) {
            double v = r.probes[slot].real();
            EXPECT_GE(v, -1e-12);
            EXPECT_LE(v, 1 + 1e-12);
            if (mode == SimMode::rpa) {
                EXPECT_TRUE(v == 0 || v == 1);
            }
            mean += v / n;
        });
        EXPECT_NEAR(mean, 0.5, 3 * std::sqrt(0.25 / n)) << mode_name(mode);
    }
}

TEST(engine, determinism_across_workers) {
    Circuit c = build_repetition_code(3, 3, noise_preset("physical"));
    Engine e(c, schedule(c), {SimMode::exact3});
    std::string one, three;
    e.run_batch(17, 5, 300, 1, [&](const TrajectoryRecord &r) { one += record_to_json(r).dump() + "\n"; });
    e.run_batch(17, 5, 300, 3, [&](const TrajectoryRecord &r) { three += record_to_json(r).dump() + "\n"; });
    EXPECT_EQ(one, three);
    EXPECT_EQ(record_to_json(e.run(17, 5)).dump() + "\n", one.substr(0, one.find('\n') + 1));
}

TEST(engine, reordering_and_fusion_preserve_distribution) {
    NoiseModel noise = noise_preset("physical");
    noise.deco.T_h = 20;  // exaggerated heating so leakage shows up in the outcomes
    noise.cz.p = 0.05;
    Circuit c = build_repetition_code(3, 2, noise);
    std::vector<int> regs;
    for (const auto &round : c.layout.raw_measurements) {
        regs.insert(regs.end(), round.begin(), round.end());
    }
    regs.insert(regs.end(), c.layout.raw_snapshots.back().begin(), c.layout.raw_snapshots.back().end());
    int n = 100000;
    Engine base(c, program_order(c), {SimMode::rpa, false});
    Engine reordered(c, schedule(c), {SimMode::rpa, true});
    auto h0 = histogram(base, n, 1, regs);
    auto h1 = histogram(reordered, n, 2, regs);
    EXPECT_GT(two_sample_p(h0, h1), 0.001);
    int n3 = 20000;
    Engine exact_base(c, program_order(c), {SimMode::exact3, false});
    Engine exact_fused(c, schedule(c), {SimMode::exact3, true});
    EXPECT_GT(two_sample_p(histogram(exact_base, n3, 3, regs), histogram(exact_fused, n3, 4, regs)), 0.001);
}

TEST(engine, memory_bound_in_rpa_mode) {
    for (int d : {3, 5, 7, 9}) {
        Circuit c = build_repetition_code(d, 2, noise_preset("physical"));
        Schedule s = schedule(c);
        Engine e(c, s, {SimMode::rpa});
        auto r = e.run(1, 0);
        EXPECT_LE(r.peak_vector_length, size_t(1) << s.peak_alive);
        EXPECT_EQ(r.peak_alive, d + 1);
    }
}

TEST(engine, mode_names) {
    EXPECT_EQ(mode_from_name("qubit-only"), SimMode::qubit_only);
    EXPECT_THROW(mode_from_name("fast"), std::invalid_argument);
    Circuit c = build_repetition_code(3, 1, noise_preset("thermal"));
    EXPECT_THROW(Engine(c, schedule(c), {SimMode::qubit_only}), std::invalid_argument);
}
