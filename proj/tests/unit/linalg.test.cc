#include "leaksim/linalg.h"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "test_util.h"

using namespace leaksim;
using leaksim::testing::random_hermitian;
using leaksim::testing::random_matrix;

namespace {

Eigen::MatrixXcd to_eigen(const ComplexMatrix &m) {
    Eigen::MatrixXcd e(m.rows(), m.cols());
    for (size_t i = 0; i < m.rows(); i++) {
        for (size_t j = 0; j < m.cols(); j++) {
            e(i, j) = m(i, j);
        }
    }
    return e;
}

}  // namespace

TEST(linalg, construction_checks) {
    EXPECT_THROW(ComplexMatrix(2, 2, {1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(ComplexMatrix(1, 1, {cplx(NAN, 0)}), std::invalid_argument);
    ComplexMatrix m(2, 3);
    EXPECT_EQ(m.data().size(), 6u);
    EXPECT_EQ(ComplexMatrix::identity(3).trace(), cplx(3));
}

TEST(linalg, multiply_and_kron) {
    ComplexMatrix a(2, 2, {1, 2, 3, 4});
    ComplexMatrix b(2, 2, {0, 1, 1, 0});
    ComplexMatrix ab = a * b;
    EXPECT_EQ(ab, ComplexMatrix(2, 2, {2, 1, 4, 3}));
    ComplexMatrix k = kron(a, b);
    EXPECT_EQ(k(0, 1), cplx(1));
    EXPECT_EQ(k(3, 2), cplx(4));
    EXPECT_EQ(k(2, 3), cplx(4));
    EXPECT_EQ(k(1, 1), cplx(0));
}

TEST(linalg, hermitian_eigen_matches_independent_solver) {
    std::mt19937_64 rng(5);
    for (size_t n : {1, 2, 3, 9, 27, 81}) {
        ComplexMatrix a = random_hermitian(rng, n);
        auto eig = hermitian_eigen(a);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(to_eigen(a));
        for (size_t k = 0; k < n; k++) {
            EXPECT_NEAR(eig.values[k], ref.eigenvalues()(k), 1e-10 * n);
        }
        // A V = V diag(values)
        ComplexMatrix av = a * eig.vectors;
        for (size_t k = 0; k < n; k++) {
            for (size_t i = 0; i < n; i++) {
                EXPECT_NEAR(std::abs(av(i, k) - eig.values[k] * eig.vectors(i, k)), 0, 1e-10 * n);
            }
        }
        EXPECT_LT(max_abs_diff(eig.vectors.adjoint() * eig.vectors, ComplexMatrix::identity(n)), 1e-12);
    }
}

TEST(linalg, hermitian_eigen_degenerate) {
    ComplexMatrix p = ComplexMatrix::diagonal({1, 1, 0, 0});
    std::mt19937_64 rng(2);
    ComplexMatrix u = leaksim::testing::random_unitary(rng, 4);
    auto eig = hermitian_eigen(u * p * u.adjoint());
    EXPECT_NEAR(eig.values[0], 0, 1e-13);
    EXPECT_NEAR(eig.values[1], 0, 1e-13);
    EXPECT_NEAR(eig.values[2], 1, 1e-13);
    EXPECT_NEAR(eig.values[3], 1, 1e-13);
}

TEST(linalg, solve) {
    std::mt19937_64 rng(3);
    ComplexMatrix a = random_matrix(rng, 6, 6);
    ComplexMatrix b = random_matrix(rng, 6, 2);
    ComplexMatrix x = solve(a, b);
    EXPECT_LT(max_abs_diff(a * x, b), 1e-12);
}

TEST(linalg, matrix_exp_trivial) {
    EXPECT_EQ(matrix_exp(ComplexMatrix(3, 3)), ComplexMatrix::identity(3));
    ComplexMatrix d = matrix_exp(ComplexMatrix::diagonal({0.5, cplx(-2, 1)}));
    EXPECT_NEAR(std::abs(d(0, 0) - std::exp(0.5)), 0, 1e-15);
    EXPECT_NEAR(std::abs(d(1, 1) - std::exp(cplx(-2, 1))), 0, 1e-15);
    EXPECT_EQ(d(0, 1), cplx(0));
}

TEST(linalg, matrix_exp_matches_independent_implementation) {
    std::mt19937_64 rng(9);
    for (size_t n : {2, 9, 81}) {
        for (double scale : {0.01, 1.0, 30.0}) {
            ComplexMatrix a = random_matrix(rng, n, n);
            a *= scale / a.norm1();
            ComplexMatrix e = matrix_exp(a);
            Eigen::MatrixXcd ref = to_eigen(a).exp();
            double norm = ref.cwiseAbs().maxCoeff();
            for (size_t i = 0; i < n; i++) {
                for (size_t j = 0; j < n; j++) {
                    EXPECT_LE(std::abs(e(i, j) - ref(i, j)), 1e-12 * std::max(1.0, norm));
                }
            }
        }
    }
}

TEST(linalg, matrix_exp_of_rotation_generator) {
    // exp(-i theta sigma_y) closed form
    double th = 0.7;
    ComplexMatrix gen(2, 2, {0, -th, th, 0});
    ComplexMatrix e = matrix_exp(gen);
    EXPECT_NEAR(std::abs(e(0, 0) - std::cos(th)), 0, 1e-15);
    EXPECT_NEAR(std::abs(e(0, 1) + std::sin(th)), 0, 1e-15);
    EXPECT_NEAR(std::abs(e(1, 0) - std::sin(th)), 0, 1e-15);
}
