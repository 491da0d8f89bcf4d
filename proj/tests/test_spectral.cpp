#include "linrfm/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace linrfm;
namespace oracle = linrfm::testing;

namespace {

Eigen::MatrixXd diag2(double a, double b) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace

TEST(SymmetricMatrixTest, SymmetrizesOnConstruction) {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 0.0, 3.0;
    SymmetricMatrix s(a);
    EXPECT_DOUBLE_EQ(s.m()(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(s.m()(1, 0), 1.0);
    EXPECT_THROW(SymmetricMatrix(Eigen::MatrixXd(2, 3)), InvalidDims);
}

TEST(EigenDecompositionTest, ReconstructionAndOrthonormality) {
    const Eigen::MatrixXd a = oracle::random_psd(8, 42);
    SymmetricMatrix s(a);
    EigenDecomposition eig = eigen_decompose(s);
    for (Eigen::Index i = 1; i < eig.eigenvalues.size(); ++i) {
        EXPECT_GE(eig.eigenvalues(i - 1), eig.eigenvalues(i));
    }
    const Eigen::MatrixXd rebuilt =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    EXPECT_LT((rebuilt - s.m()).norm() / std::max(1.0, s.m().norm()), 1e-10);
    const Eigen::MatrixXd vtv = eig.eigenvectors.transpose() * eig.eigenvectors;
    EXPECT_LT((vtv - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-10);
}

TEST(SpectralApplyTest, IdentityMatrixAnyPowerIsIdentity) {
    SymmetricMatrix id = SymmetricMatrix::identity(3);
    const SymmetricMatrix out = spectral_apply(id, SpectralFunction::power(0.7));
    EXPECT_LT((out.m() - id.m()).norm(), 1e-12);
}

TEST(SpectralApplyTest, DiagonalSquareRoot) {
    SymmetricMatrix a(diag2(4.0, 1.0));
    const SymmetricMatrix out = spectral_apply(a, SpectralFunction::power(0.5));
    EXPECT_LT((out.m() - diag2(2.0, 1.0)).norm(), 1e-12);
}

TEST(SpectralApplyTest, MatchesScalarOracleOnRandomPsd) {
    const Eigen::MatrixXd a = oracle::random_psd(6, 7);
    const auto map = [](double s) { return std::pow(s + 1e-3, 0.25); };
    const Eigen::MatrixXd expected = oracle::spectral_apply_oracle(a, map);
    const SymmetricMatrix got = spectral_apply(SymmetricMatrix(a), SpectralFunction::power(0.25, 1e-3));
    EXPECT_LT((got.m() - expected).norm(), 1e-9);
}

TEST(SpectralApplyTest, RejectsNegativeEigenvalues) {
    SymmetricMatrix a(diag2(1.0, -0.5));
    EXPECT_THROW(spectral_apply(a, SpectralFunction::power(0.5)), NonPsdInput);
}

TEST(SpectralApplyTest, ClampsTinyNegatives) {
    const Eigen::MatrixXd base = oracle::random_psd(4, 3);
    SymmetricMatrix a(base - 1e-14 * base.norm() * Eigen::MatrixXd::Identity(4, 4));
    EXPECT_NO_THROW(spectral_apply(a, SpectralFunction::power(0.5)));
}

TEST(SpectralApplyTest, IdentityFunctionIsIdentityOnPsd) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Eigen::MatrixXd a = oracle::random_psd(5, seed);
        const SymmetricMatrix out = spectral_apply(SymmetricMatrix(a), SpectralFunction::identity());
        EXPECT_LT((out.m() - 0.5 * (a + a.transpose())).norm(), 1e-10 * std::max(1.0, a.norm()));
    }
}

TEST(SpectralApplyTest, PowerInverseRoundTrip) {
    // Eigenvalues kept inside [1e-3, 1e3].
    Eigen::MatrixXd a = oracle::random_psd(6, 11) + 0.05 * Eigen::MatrixXd::Identity(6, 6);
    for (double alpha : {0.25, 0.5, 2.0}) {
        const SymmetricMatrix forward = spectral_apply(SymmetricMatrix(a), SpectralFunction::power(alpha));
        const SymmetricMatrix back = spectral_apply(forward, SpectralFunction::power(1.0 / alpha));
        EXPECT_LT((back.m() - 0.5 * (a + a.transpose())).norm() / a.norm(), 1e-8)
            << "alpha = " << alpha;
    }
}

TEST(SpectralApplyTest, SharedEigenbasisActsElementwiseOnSpectrum) {
    const Eigen::MatrixXd a = oracle::random_psd(5, 21);
    EigenDecomposition eig = eigen_decompose(SymmetricMatrix(a));
    const SpectralFunction phi = SpectralFunction::power(0.5, 1e-2);
    const SymmetricMatrix out = spectral_apply(SymmetricMatrix(a), phi);
    // In the shared eigenbasis the map is exactly elementwise on the spectrum.
    const Eigen::MatrixXd in_basis =
        eig.eigenvectors.transpose() * out.m() * eig.eigenvectors;
    for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(in_basis(i, i), phi(std::max(eig.eigenvalues(i), 0.0)), 1e-10);
    }
}

TEST(IntegerMatrixPowerTest, FirstPowerIsIdentityOperation) {
    const Eigen::MatrixXd a = oracle::random_psd(4, 5);
    SymmetricMatrix s(a);
    EXPECT_LT((integer_matrix_power(s, 1).m() - s.m()).norm(), 1e-14);
}

TEST(IntegerMatrixPowerTest, DiagonalCubes) {
    SymmetricMatrix a(diag2(2.0, 3.0));
    EXPECT_LT((integer_matrix_power(a, 3).m() - diag2(8.0, 27.0)).norm(), 1e-12);
}

TEST(IntegerMatrixPowerTest, AgreesWithSpectralApply) {
    const Eigen::MatrixXd base = oracle::random_psd(8, 9);
    SymmetricMatrix a(base);
    const SymmetricMatrix via_power = integer_matrix_power(a, 5);
    const SymmetricMatrix via_eig = spectral_apply(a, SpectralFunction::power(5.0));
    EXPECT_LT((via_power.m() - via_eig.m()).norm() / via_eig.m().norm(), 1e-8);
}

TEST(IntegerMatrixPowerTest, PropertyAllIntegerPowersSmallDims) {
    for (int dim : {2, 3, 5, 9, 16}) {
        for (int k : {1, 2, 3, 4, 6}) {
            const Eigen::MatrixXd base =
                oracle::random_psd(dim, static_cast<std::uint64_t>(dim * 131 + k));
            SymmetricMatrix a(base);
            const Eigen::MatrixXd lhs = integer_matrix_power(a, k).m();
            const Eigen::MatrixXd rhs =
                spectral_apply(a, SpectralFunction::power(static_cast<double>(k))).m();
            EXPECT_LT((lhs - rhs).norm() / std::max(1.0, rhs.norm()), 1e-8)
                << "dim " << dim << " k " << k;
        }
    }
}

TEST(PseudoInverseSolveTest, IdentityCase) {
    Eigen::VectorXd b(2);
    b << 3.0, 4.0;
    const Eigen::VectorXd x = pseudo_inverse_solve(Eigen::MatrixXd::Identity(2, 2), b, 0.0);
    EXPECT_LT((x - b).norm(), 1e-12);
}

TEST(PseudoInverseSolveTest, MinimumNormUnderdetermined) {
    Eigen::MatrixXd a(1, 2);
    a << 1.0, 1.0;
    Eigen::VectorXd b(1);
    b << 2.0;
    const Eigen::VectorXd x = pseudo_inverse_solve(a, b, 0.0);
    EXPECT_NEAR(x(0), 1.0, 1e-12);
    EXPECT_NEAR(x(1), 1.0, 1e-12);
}

TEST(PseudoInverseSolveTest, MatchesSvdOracle) {
    const Eigen::MatrixXd a = oracle::random_gaussian(5, 12, 33);
    const Eigen::VectorXd b = oracle::random_gaussian(5, 1, 34);
    const Eigen::VectorXd expected = oracle::svd_pinv_solve(a, b);
    const Eigen::VectorXd got = pseudo_inverse_solve(a, b, 0.0);
    EXPECT_LT((got - expected).norm() / expected.norm(), 1e-9);
}

TEST(PseudoInverseSolveTest, RidgeMatchesNormalEquations) {
    const Eigen::MatrixXd a = oracle::random_gaussian(6, 4, 35);
    const Eigen::VectorXd b = oracle::random_gaussian(6, 1, 36);
    const double ridge = 1e-2;
    const Eigen::MatrixXd normal =
        a.transpose() * a + ridge * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::VectorXd expected = normal.ldlt().solve(a.transpose() * b);
    const Eigen::VectorXd got = pseudo_inverse_solve(a, b, ridge);
    EXPECT_LT((got - expected).norm() / expected.norm(), 1e-10);
}

TEST(PseudoInverseSolveTest, SingularGramThrows) {
    Eigen::MatrixXd a(2, 3);
    a << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;  // rank 1
    Eigen::VectorXd b(2);
    b << 1.0, 1.0;
    EXPECT_THROW(pseudo_inverse_solve(a, b, 0.0), SingularSystem);
}

TEST(SingularValuesTest, IdentityAndSignInvariance) {
    const Eigen::VectorXd id_values = singular_values(Eigen::MatrixXd::Identity(3, 3));
    EXPECT_LT((id_values - Eigen::VectorXd::Ones(3)).norm(), 1e-12);

    const Eigen::VectorXd diag_values = singular_values(diag2(3.0, -4.0));
    EXPECT_NEAR(diag_values(0), 4.0, 1e-12);
    EXPECT_NEAR(diag_values(1), 3.0, 1e-12);
}

TEST(SingularValuesTest, MatchesGramOracle) {
    const Eigen::MatrixXd a = oracle::random_gaussian(7, 4, 55);
    const Eigen::VectorXd expected = oracle::gram_singular_values(a);
    const Eigen::VectorXd got = singular_values(a);
    ASSERT_EQ(got.size(), expected.size());
    for (Eigen::Index i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got(i), expected(i), 1e-9);
    }
}
