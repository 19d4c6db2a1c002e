#include "leaksim/channel.h"

#include <gtest/gtest.h>

#include "leaksim/noise.h"
#include "leaksim/rpa.h"
#include "test_util.h"

using namespace leaksim;
using leaksim::testing::random_channel;
using leaksim::testing::random_density;
using leaksim::testing::random_hermitian;

namespace {

ComplexMatrix pauli(int k) {
    switch (k) {
        case 0:
            return ComplexMatrix(2, 2, {1, 0, 0, 1});
        case 1:
            return ComplexMatrix(2, 2, {0, 1, 1, 0});
        case 2:
            return ComplexMatrix(2, 2, {0, cplx(0, -1), cplx(0, 1), 0});
        default:
            return ComplexMatrix(2, 2, {1, 0, 0, -1});
    }
}

}  // namespace

TEST(channel, make_validates) {
    EXPECT_THROW(KrausChannel::make({ComplexMatrix::identity(2), ComplexMatrix::identity(2)}), std::invalid_argument);
    EXPECT_THROW(KrausChannel::make({ComplexMatrix::identity(2), ComplexMatrix(3, 2)}), std::invalid_argument);
    auto ch = KrausChannel::make({std::sqrt(0.5) * ComplexMatrix::identity(2), std::sqrt(0.5) * pauli(3)});
    EXPECT_LT(ch.trace_preservation_error(), 1e-15);
}

TEST(decomposition, qutrit_blocks) {
    auto d = SubspaceDecomposition::qutrit_leakage(2);
    EXPECT_EQ(d.total_dim(), 9u);
    EXPECT_EQ(d.num_sectors(), 4u);
    EXPECT_EQ(d.sector_name(1), "c,2");
    EXPECT_EQ(d.sector_dim(0), 4u);
    EXPECT_EQ(d.sector_dim(3), 1u);
    EXPECT_EQ(d.sector_of(3 * 1 + 2), 1u);
    EXPECT_EQ(d.sector_of(3 * 2 + 0), 2u);
    EXPECT_EQ(d.computational_sector(), 0u);
    ComplexMatrix sum(9, 9);
    for (size_t s = 0; s < 4; s++) {
        ComplexMatrix x = d.embedding(s);
        EXPECT_LT(max_abs_diff(x.adjoint() * x, ComplexMatrix::identity(d.sector_dim(s))), 1e-15);
        sum += x * x.adjoint();
    }
    EXPECT_EQ(sum, ComplexMatrix::identity(9));
    EXPECT_THROW(SubspaceDecomposition({{3, {{"c", {0, 1}}, {"2", {1, 2}}}}}), std::invalid_argument);
    EXPECT_THROW(SubspaceDecomposition({{3, {{"c", {0, 1}}}}}), std::invalid_argument);
}

TEST(dephase, block_diagonal_unchanged) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    ComplexMatrix rho(3, 3, {0.5, cplx(0.1, 0.2), 0, cplx(0.1, -0.2), 0.3, 0, 0, 0, 0.2});
    EXPECT_EQ(dephase(rho, d), rho);
}

TEST(dephase, superposition_becomes_mixture) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    double a = 0.6, b = 0.8;
    std::vector<cplx> psi{a * std::sqrt(0.5), a * std::sqrt(0.5), b};
    ComplexMatrix rho = ComplexMatrix::column(psi) * ComplexMatrix::column(psi).adjoint();
    ComplexMatrix expected(3, 3);
    for (size_t i = 0; i < 2; i++) {
        for (size_t j = 0; j < 2; j++) {
            expected(i, j) = a * a * 0.5;
        }
    }
    expected(2, 2) = b * b;
    EXPECT_LT(max_abs_diff(dephase(rho, d), expected), 1e-15);
}

TEST(dephase, matches_projector_sum_and_is_idempotent) {
    std::mt19937_64 rng(1);
    for (size_t n : {1, 2}) {
        auto d = SubspaceDecomposition::qutrit_leakage(n);
        ComplexMatrix a = random_hermitian(rng, d.total_dim());
        ComplexMatrix ref(d.total_dim(), d.total_dim());
        for (size_t s = 0; s < d.num_sectors(); s++) {
            ref += d.projector(s) * a * d.projector(s);
        }
        ComplexMatrix r = dephase(a, d);
        EXPECT_LT(max_abs_diff(r, ref), 1e-15);
        EXPECT_EQ(dephase(r, d), r);
        if (n == 1) {
            EXPECT_EQ(r(0, 2), cplx(0));
            EXPECT_EQ(r(1, 2), cplx(0));
            EXPECT_EQ(r(2, 0), cplx(0));
            EXPECT_EQ(r(2, 1), cplx(0));
            EXPECT_EQ(r(0, 1), a(0, 1));
        }
        ComplexMatrix rho = random_density(rng, d.total_dim());
        EXPECT_NEAR(dephase(rho, d).trace().real(), 1, 1e-14);
    }
    EXPECT_THROW(dephase(ComplexMatrix(2, 2), SubspaceDecomposition::qutrit_leakage(1)), std::invalid_argument);
}

TEST(incoherence, projector_set) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    auto ch = KrausChannel::make({d.projector(0), d.projector(1)});
    auto rep = is_incoherent_kraus_set(ch, d);
    EXPECT_TRUE(rep.incoherent);
    EXPECT_TRUE(rep.strictly_incoherent);
    EXPECT_EQ(rep.transition[0], (std::vector<int>{0, -1}));
    EXPECT_EQ(rep.transition[1], (std::vector<int>{-1, 1}));
}

TEST(incoherence, hadamard_across_blocks_is_coherent) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    double r = std::sqrt(0.5);
    ComplexMatrix u(3, 3, {r, 0, r, 0, 1, 0, r, 0, -r});
    auto rep = is_incoherent_kraus_set(KrausChannel::unitary(u), d);
    EXPECT_FALSE(rep.incoherent);
    EXPECT_FALSE(rep.strictly_incoherent);
}

TEST(incoherence, leakage_jump_is_strict_but_merge_is_not) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    double q = 0.3;
    ComplexMatrix stay = ComplexMatrix::diagonal({1, std::sqrt(1 - q), 1});
    ComplexMatrix jump = ComplexMatrix::outer(3, 2, 1, std::sqrt(q));
    auto leak = is_incoherent_kraus_set(KrausChannel::make({stay, jump}), d);
    EXPECT_TRUE(leak.incoherent);
    EXPECT_TRUE(leak.strictly_incoherent);
    EXPECT_EQ(leak.transition[1], (std::vector<int>{1, -1}));
    // |1> -> |0> and |2> -> |0> inside one Kraus operator: both sectors map to c.
    ComplexMatrix k0(3, 3);
    k0(0, 1) = 1;
    k0(0, 2) = 1;
    ComplexMatrix k1(3, 3);
    k1(0, 0) = 1;
    auto rep = is_incoherent_kraus_set(KrausChannel{3, 3, {k0, k1}}, d);
    EXPECT_TRUE(rep.incoherent);
    EXPECT_FALSE(rep.strictly_incoherent);
}

TEST(process_fidelity, identity_and_projectors) {
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    EXPECT_DOUBLE_EQ(process_fidelity(KrausChannel::identity(3), d), 1.0);
    EXPECT_DOUBLE_EQ(process_fidelity(KrausChannel::make({d.projector(0), d.projector(1)}), d), 1.0);
    auto d2 = SubspaceDecomposition::qutrit_leakage(2);
    EXPECT_DOUBLE_EQ(process_fidelity(KrausChannel::identity(9), d2), 1.0);
    // Full leakage of |1>: Tr(P_C K) = 1 for K = |0><0| + |2><1| + |1><2|.
    ComplexMatrix k(3, 3, {1, 0, 0, 0, 0, 1, 0, 1, 0});
    EXPECT_DOUBLE_EQ(process_fidelity(KrausChannel::unitary(k), d), 0.25);
}

TEST(process_fidelity, bounded_for_random_channels) {
    std::mt19937_64 rng(4);
    auto d = SubspaceDecomposition::qutrit_leakage(1);
    for (int k = 0; k < 20; k++) {
        double f = process_fidelity(random_channel(rng, 3, 3, 1 + k % 4), d);
        EXPECT_GE(f, 0);
        EXPECT_LE(f, 1 + 1e-12);
    }
}

TEST(choi, identity_qubit) {
    ComplexMatrix j = channel_to_choi(KrausChannel::identity(2));
    ComplexMatrix expected(4, 4);
    for (size_t a : {0, 3}) {
        for (size_t b : {0, 3}) {
            expected(a, b) = 1;
        }
    }
    EXPECT_EQ(j, expected);
    auto back = choi_to_kraus(j, 2, 2);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_LT(choi_distance(back, KrausChannel::identity(2)), 1e-14);
}

TEST(choi, pauli_mixture) {
    std::vector<double> w{0.4, 0.3, 0.2, 0.1};
    std::vector<ComplexMatrix> ks;
    for (int k = 0; k < 4; k++) {
        ks.push_back(std::sqrt(w[k]) * pauli(k));
    }
    auto ch = KrausChannel::make(ks);
    auto back = choi_to_kraus(channel_to_choi(ch), 2, 2);
    ASSERT_EQ(back.size(), 4u);
    for (int k = 0; k < 4; k++) {
        // Each extracted operator is proportional to the Pauli with the matching weight.
        cplx overlap = 0;
        for (size_t x = 0; x < 4; x++) {
            overlap += std::conj(pauli(k).data()[x]) * back.kraus[k].data()[x];
        }
        EXPECT_NEAR(std::abs(overlap) / 2, std::sqrt(w[k]), 1e-12);
    }
    // Equal weights: four operators, channel preserved.
    std::vector<ComplexMatrix> eq;
    for (int k = 0; k < 4; k++) {
        eq.push_back(0.5 * pauli(k));
    }
    auto dep = KrausChannel::make(eq);
    auto dep_back = choi_to_kraus(channel_to_choi(dep), 2, 2);
    EXPECT_EQ(dep_back.size(), 4u);
    EXPECT_LT(choi_distance(dep, dep_back), 1e-14);
}

TEST(choi, lindblad_extraction_is_trace_preserving) {
    DecoherenceParams p{20, 80, kInf, kInf};
    auto ch = lindblad_channel(p, 25, 3);
    EXPECT_LT(ch.trace_preservation_error(), 1e-10);
}

TEST(choi, round_trip_random) {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; k++) {
        size_t din = 2 + k % 3, dout = 2 + (k / 3) % 3;
        auto ch = random_channel(rng, din, dout, std::max<size_t>(1 + k % 5, (din + dout - 1) / dout));
        auto back = compress(ch);
        EXPECT_LT(choi_distance(ch, back), 1e-9);
        EXPECT_LT(back.trace_preservation_error(), 1e-10);
        EXPECT_LE(back.size(), din * dout);
        for (size_t i = 1; i < back.size(); i++) {
            EXPECT_GE(back.kraus[i - 1].frobenius_norm(), back.kraus[i].frobenius_norm() - 1e-12);
        }
    }
}

TEST(choi, rejects_non_psd) {
    ComplexMatrix j = ComplexMatrix::diagonal({1, -0.5, 0.5, 1});
    EXPECT_THROW(choi_to_kraus(j, 2, 2), std::invalid_argument);
}

TEST(channel, superoperator_matches_kraus_action) {
    std::mt19937_64 rng(12);
    auto ch = random_channel(rng, 3, 2, 3);
    ComplexMatrix rho = random_density(rng, 3);
    ComplexMatrix s = superoperator(ch);
    ComplexMatrix v(9, 1, rho.data());
    ComplexMatrix out = s * v;
    ComplexMatrix direct = apply_channel(ch, rho);
    EXPECT_LT(max_abs_diff(ComplexMatrix(2, 2, out.data()), direct), 1e-14);
    EXPECT_LT(max_abs_diff(superoperator_to_choi(s, 3, 2), channel_to_choi(ch)), 1e-14);
}

TEST(channel, compose_and_tensor) {
    std::mt19937_64 rng(13);
    auto a = random_channel(rng, 2, 3, 2);
    auto b = random_channel(rng, 3, 3, 2);
    ComplexMatrix rho = random_density(rng, 2);
    EXPECT_LT(max_abs_diff(apply_channel(compose(a, b), rho), apply_channel(b, apply_channel(a, rho))), 1e-14);
    auto t = tensor(a, b);
    EXPECT_EQ(t.input_dim, 6u);
    EXPECT_LT(t.trace_preservation_error(), 1e-12);
}

TEST(channel, json_round_trip) {
    std::mt19937_64 rng(14);
    auto ch = random_channel(rng, 3, 3, 2);
    auto back = channel_from_json(nlohmann::json::parse(channel_to_json(ch).dump()));
    EXPECT_EQ(back.size(), ch.size());
    EXPECT_LT(choi_distance(ch, back), 1e-14);
    EXPECT_THROW(channel_from_json(nlohmann::json::parse(R"({"input_dim":2,"output_dim":2,"kraus":[[[1,0],[0,0],[0,0],[0.5,0]]]})")),
                 std::invalid_argument);
}
