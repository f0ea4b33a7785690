#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <random>

#include "dica/linalg.hpp"

using namespace dica;

namespace {

Eigen::MatrixXd random_psd(std::mt19937& rng, int n, double shift = 0.0) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
    Eigen::MatrixXd out = m * m.transpose();
    out.diagonal().array() += shift;
    return out;
}

}  // namespace

TEST(CholeskyPd, IdentityFactorsToIdentity) {
    const Eigen::MatrixXd l = cholesky_pd(Eigen::MatrixXd::Identity(3, 3));
    EXPECT_TRUE(l.isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(CholeskyPd, DiagonalSquareRoots) {
    Eigen::MatrixXd a = Eigen::Vector2d(4.0, 9.0).asDiagonal();
    const Eigen::MatrixXd l = cholesky_pd(a);
    EXPECT_TRUE(l.isApprox(Eigen::MatrixXd(Eigen::Vector2d(2.0, 3.0).asDiagonal())));
}

TEST(CholeskyPd, ReconstructsRandomPdMatrix) {
    std::mt19937 rng(1);
    const Eigen::MatrixXd a = random_psd(rng, 8, 1.0);
    const Eigen::MatrixXd l = cholesky_pd(a);
    const double rel = (l * l.transpose() - a).norm() / a.norm();
    EXPECT_LT(rel, 1e-9);
}

TEST(CholeskyPd, NonPdNamesPivot) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    a(1, 1) = -2.0;
    try {
        cholesky_pd(a);
        FAIL() << "expected DefinitenessError";
    } catch (const DefinitenessError& e) {
        EXPECT_EQ(e.pivot(), 1);
    }
}

TEST(CholeskyPd, AsymmetricInputThrows) {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 0.5, 0.1, 1.0;
    EXPECT_THROW(cholesky_pd(a), InputError);
}

TEST(SolveSpd, IdentityReturnsRhs) {
    const Eigen::MatrixXd b = Eigen::MatrixXd::Random(3, 2);
    EXPECT_TRUE(solve_spd(Eigen::MatrixXd::Identity(3, 3), b).isApprox(b));
}

TEST(SolveSpd, ScalarDiagonal) {
    Eigen::MatrixXd a(1, 1);
    a << 2.0;
    Eigen::MatrixXd b(1, 1);
    b << 4.0;
    EXPECT_DOUBLE_EQ(solve_spd(a, b)(0, 0), 2.0);
}

TEST(SolveSpd, ResidualBelowTolerance) {
    std::mt19937 rng(2);
    const Eigen::MatrixXd a = random_psd(rng, 20, 0.5);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Random(20, 3);
    const Eigen::MatrixXd x = solve_spd(a, b);
    EXPECT_LT((a * x - b).norm() / b.norm(), 1e-8);
}

TEST(TopEigNonsymmetric, DiagonalCase) {
    Eigen::MatrixXd m = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    const auto res = top_eig_nonsymmetric(m, 1, 1e-6);
    EXPECT_DOUBLE_EQ(res.values(0), 3.0);
    EXPECT_NEAR(res.vectors(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(res.vectors(1, 0), 0.0, 1e-14);
    EXPECT_EQ(res.max_imag, 0.0);
}

TEST(TopEigNonsymmetric, PsdProductHasRealNonnegativeSpectrum) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd s = random_psd(rng, 12);
        const Eigen::MatrixXd p = random_psd(rng, 12);
        const Eigen::MatrixXd m = s * p;
        const auto res = top_eig_nonsymmetric(m, 12, 1e-6);
        for (Eigen::Index i = 0; i < res.values.size(); ++i)
            EXPECT_GE(res.values(i), -1e-8 * res.values.cwiseAbs().maxCoeff());

        // Residual contract for every accepted pair.
        const double m_norm = m.norm();
        for (Eigen::Index k = 0; k < res.vectors.cols(); ++k) {
            const Eigen::VectorXd v = res.vectors.col(k);
            const double resid = (m * v - res.values(k) * v).norm();
            EXPECT_LE(resid, 1e-6 * m_norm * v.norm());
        }

        // Oracle: compare against a full dense eigendecomposition.
        Eigen::EigenSolver<Eigen::MatrixXd> es(m);
        Eigen::VectorXd oracle = es.eigenvalues().real();
        std::sort(oracle.data(), oracle.data() + oracle.size(), std::greater<>());
        for (Eigen::Index i = 0; i < res.values.size(); ++i)
            EXPECT_NEAR(res.values(i), oracle(i), 1e-8 * std::max(1.0, std::abs(oracle(0))));
    }
}

TEST(TopEigNonsymmetric, RotationMatrixFailsSpectrumCheck) {
    Eigen::MatrixXd rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    EXPECT_THROW(top_eig_nonsymmetric(rot, 1, 1e-8), SpectrumError);
}

TEST(TopEigNonsymmetric, MOutOfRangeThrows) {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(top_eig_nonsymmetric(m, 4, 1e-6), InputError);
    EXPECT_THROW(top_eig_nonsymmetric(m, 0, 1e-6), InputError);
}

TEST(TopEigNonsymmetric, Deterministic) {
    std::mt19937 rng(4);
    const Eigen::MatrixXd m = random_psd(rng, 10) * random_psd(rng, 10);
    const auto a = top_eig_nonsymmetric(m, 4, 1e-6);
    const auto b = top_eig_nonsymmetric(m, 4, 1e-6);
    EXPECT_EQ((a.vectors - b.vectors).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a.values - b.values).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TopEigNonsymmetric, SignConventionSurvivesPermutation) {
    std::mt19937 rng(5);
    const Eigen::MatrixXd m = random_psd(rng, 8) * random_psd(rng, 8);
    const auto base = top_eig_nonsymmetric(m, 3, 1e-6);

    // Conjugate by a permutation, solve, and permute back.
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 8, rng);
    const Eigen::MatrixXd mp = perm * m * perm.transpose();
    const auto shuffled = top_eig_nonsymmetric(mp, 3, 1e-6);
    const Eigen::MatrixXd back = perm.transpose() * shuffled.vectors;
    EXPECT_LT((back - base.vectors).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TopEigSymmetric, MatchesSelfAdjointOracle) {
    std::mt19937 rng(6);
    const Eigen::MatrixXd a = random_psd(rng, 9);
    const auto res = top_eig_symmetric(a, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_NEAR(res.values(k), es.eigenvalues()(8 - k), 1e-10);
        const double align = std::abs(res.vectors.col(k).dot(es.eigenvectors().col(8 - k)));
        EXPECT_NEAR(align, 1.0, 1e-9);
    }
}

TEST(NormalizeConstraint, IdentityMetricKeepsUnitVectors) {
    Eigen::MatrixXd v(2, 2);
    v << 1.0, 0.0, 0.0, 1.0;
    const auto out = normalize_constraint(v, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_TRUE(out.isApprox(v));
}

TEST(NormalizeConstraint, RescalesByColumnNorm) {
    Eigen::MatrixXd v(2, 1);
    v << 2.0, 0.0;
    const auto out = normalize_constraint(v, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_DOUBLE_EQ(out(0, 0), 1.0);
}

TEST(NormalizeConstraint, RandomPdMetricGivesUnitQuadraticForms) {
    std::mt19937 rng(7);
    const Eigen::MatrixXd c = random_psd(rng, 6, 0.5);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(6, 3);
    const auto out = normalize_constraint(v, c);
    for (Eigen::Index k = 0; k < 3; ++k)
        EXPECT_NEAR(out.col(k).dot(c * out.col(k)), 1.0, 1e-10);
}

TEST(NormalizeConstraint, DegenerateDirectionThrows) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd v(2, 1);
    v << 1.0, 0.0;
    EXPECT_THROW(normalize_constraint(v, c), DegenerateDirectionError);
}
