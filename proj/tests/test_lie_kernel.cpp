#include <gtest/gtest.h>

#include <cmath>

#include "chaplygin/lie_kernel.hpp"
#include "chaplygin/rng.hpp"
#include "oracles.hpp"

using namespace chaplygin;

namespace {

AlgebraVector random_with_norm(int n, StreamRng& rng, double norm) {
    AlgebraVector u = random_algebra_vector(n, rng);
    return (norm / u.norm()) * u;
}

}  // namespace

TEST(Basis, Dimensions) {
    const BasisSet b3 = build_basis(3);
    EXPECT_EQ(b3.dim(), 3);
    EXPECT_EQ(b3.Y.size(), 1u);
    EXPECT_EQ(b3.Z.size(), 2u);
    const BasisSet b4 = build_basis(4);
    EXPECT_EQ(b4.dim(), 6);
    EXPECT_EQ(b4.Y.size(), 3u);
    EXPECT_EQ(b4.Z.size(), 3u);
    EXPECT_THROW(build_basis(2), std::invalid_argument);
}

TEST(Basis, Z1Z2BracketN3) {
    const BasisSet b = build_basis(3);
    Eigen::MatrixXd z1 = Eigen::MatrixXd::Zero(3, 3), z2 = z1, e12 = z1;
    z1(0, 2) = 1;
    z1(2, 0) = -1;
    z2(1, 2) = 1;
    z2(2, 1) = -1;
    e12(0, 1) = 1;
    e12(1, 0) = -1;
    EXPECT_LT((b.Z[0].matrix() - z1).norm(), 1e-15);
    EXPECT_LT((b.Z[1].matrix() - z2).norm(), 1e-15);
    const Eigen::MatrixXd expected = z1 * z2 - z2 * z1;
    EXPECT_LT((expected + e12).norm(), 1e-15);
    EXPECT_LT((bracket(b.Z[0], b.Z[1]).matrix() - expected).norm(), 1e-15);
    EXPECT_LT((bracket(b.Z[0], b.Z[1]) + b.Y[0]).norm(), 1e-15);
}

TEST(Basis, OrthonormalAndAdapted) {
    for (int n = 3; n <= 6; ++n) {
        const BasisSet b = build_basis(n);
        for (int i = 0; i < b.dim(); ++i)
            for (int j = 0; j < b.dim(); ++j)
                EXPECT_NEAR(oracle::ip(b.element(i).matrix(), b.element(j).matrix()), i == j ? 1.0 : 0.0, 1e-12);
        const Eigen::VectorXd en = Eigen::VectorXd::Unit(n, n - 1);
        for (const auto& y : b.Y) EXPECT_LT((y.matrix() * en).norm(), 1e-15);
        for (const auto& zb : b.Z)
            for (const auto& zc : b.Z) EXPECT_LT(project_hperp(bracket(zb, zc)).norm(), 1e-12);
    }
}

TEST(Basis, StructureTensorMatchesMatrices) {
    const int n = 4;
    const BasisSet b = build_basis(n);
    const auto mats = oracle::basis_matrices(n);
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j) {
            const Eigen::MatrixXd c = mats[i] * mats[j] - mats[j] * mats[i];
            EXPECT_LT((b.structure[i][j] - oracle::coords(c, mats)).norm(), 1e-14);
        }
}

TEST(AlgebraVector, RoundTripAndSkew) {
    StreamRng rng(1);
    for (int n = 3; n <= 5; ++n) {
        const AlgebraVector u = random_algebra_vector(n, rng);
        const Eigen::MatrixXd m = u.matrix();
        EXPECT_LT((m + m.transpose()).norm(), 1e-12);
        EXPECT_LT((AlgebraVector::from_matrix(m).coords() - u.coords()).norm(), 1e-12);
    }
    EXPECT_THROW(AlgebraVector(3, Eigen::VectorXd::Zero(4)), std::invalid_argument);
    EXPECT_THROW(AlgebraVector(3) + AlgebraVector(4), std::invalid_argument);
}

TEST(Inner, MatchesHalfTraceAndPositive) {
    StreamRng rng(2);
    for (int n = 3; n <= 5; ++n) {
        const AlgebraVector u = random_algebra_vector(n, rng), v = random_algebra_vector(n, rng);
        EXPECT_NEAR(inner(u, v), oracle::ip(u.matrix(), v.matrix()), 1e-12);
        EXPECT_NEAR(inner(u, v), inner(v, u), 1e-15);
        EXPECT_GT(inner(u, u), 0.0);
    }
    EXPECT_EQ(inner(AlgebraVector(3), AlgebraVector(3)), 0.0);
    EXPECT_THROW(inner(AlgebraVector(3), AlgebraVector(4)), std::invalid_argument);
}

TEST(Inner, AdInvariance) {
    StreamRng rng(3);
    for (int n = 3; n <= 5; ++n)
        for (int k = 0; k < 100; ++k) {
            const GroupPoint s = random_group_point(n, rng);
            const AlgebraVector u = random_algebra_vector(n, rng), v = random_algebra_vector(n, rng);
            EXPECT_NEAR(inner(Ad(s, u), Ad(s, v)), inner(u, v), 1e-10);
        }
}

TEST(Bracket, AntisymmetryJacobiSkewness) {
    StreamRng rng(4);
    for (int n = 3; n <= 5; ++n) {
        for (int k = 0; k < 50; ++k) {
            const AlgebraVector u = random_algebra_vector(n, rng), v = random_algebra_vector(n, rng),
                                w = random_algebra_vector(n, rng);
            EXPECT_LT(bracket(u, u).norm(), 1e-15);
            const AlgebraVector jac = bracket(u, bracket(v, w)) + bracket(v, bracket(w, u)) + bracket(w, bracket(u, v));
            EXPECT_LT(jac.norm(), 1e-12);
            EXPECT_LT(std::abs(inner(bracket(w, u), v) + inner(u, bracket(w, v))), 1e-12);
        }
    }
}

TEST(Bracket, ZWithStabilizerRelation) {
    // For Y = [Z_b, Z_c]: [Z_a, Y] = delta_ac Z_b - delta_ab Z_c.
    for (int n = 3; n <= 5; ++n) {
        const BasisSet b = build_basis(n);
        const int r = n - 1;
        for (int bi = 0; bi < r; ++bi)
            for (int ci = 0; ci < r; ++ci) {
                if (bi == ci) continue;
                const AlgebraVector y = bracket(b.Z[bi], b.Z[ci]);
                for (int a = 0; a < r; ++a) {
                    AlgebraVector expected(n);
                    if (a == bi) expected -= b.Z[ci];
                    if (a == ci) expected += b.Z[bi];
                    const Eigen::MatrixXd lhs = b.Z[a].matrix() * y.matrix() - y.matrix() * b.Z[a].matrix();
                    EXPECT_LT((lhs - expected.matrix()).norm(), 1e-14);
                }
            }
    }
}

TEST(Ad, IdentityHomomorphismInverse) {
    StreamRng rng(5);
    for (int n = 3; n <= 5; ++n) {
        const GroupPoint s = random_group_point(n, rng);
        const AlgebraVector u = random_algebra_vector(n, rng), v = random_algebra_vector(n, rng);
        EXPECT_LT((Ad(GroupPoint::identity(n), u) - u).norm(), 1e-15);
        EXPECT_LT((Ad(s, bracket(u, v)) - bracket(Ad(s, u), Ad(s, v))).norm(), 1e-10);
        EXPECT_LT((Ad(s.inverse(), Ad(s, u)) - u).norm(), 1e-10);
    }
}

TEST(Projections, SplitIsExact) {
    StreamRng rng(6);
    for (int n = 3; n <= 5; ++n) {
        const AlgebraVector u = random_algebra_vector(n, rng);
        EXPECT_EQ((project_h(u) + project_hperp(u)).coords(), u.coords());
        EXPECT_EQ(inner(project_h(u), project_hperp(u)), 0.0);
    }
}

TEST(Exp, ZeroAndOrthogonality) {
    StreamRng rng(7);
    for (int n = 3; n <= 5; ++n) {
        EXPECT_LT((exp_map(AlgebraVector(n)).matrix() - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-16);
        for (int k = 0; k < 50; ++k) {
            const double r = 10.0 * rng.uniform();
            const GroupPoint g = exp_map(random_with_norm(n, rng, r));
            EXPECT_LT(g.orth_defect(), 1e-12);
            EXPECT_NEAR(g.matrix().determinant(), 1.0, 1e-9);
        }
    }
}

TEST(Exp, MatchesTaylorOracle) {
    StreamRng rng(8);
    for (int n = 3; n <= 5; ++n)
        for (int k = 0; k < 20; ++k) {
            const AlgebraVector u = random_with_norm(n, rng, 3.0 * rng.uniform());
            EXPECT_LT((exp_map(u).matrix() - oracle::expm(u.matrix())).norm(), 1e-12);
        }
}

TEST(Exp, StabilizerFixesEn) {
    const int n = 4;
    const BasisSet b = build_basis(n);
    const Eigen::VectorXd en = Eigen::VectorXd::Unit(n, n - 1);
    for (const auto& y : b.Y) EXPECT_LT((exp_map(y).matrix() * en - en).norm(), 1e-12);
}

TEST(Log, RoundTrip) {
    StreamRng rng(9);
    for (int n = 3; n <= 5; ++n)
        for (int k = 0; k < 100; ++k) {
            const AlgebraVector u = random_with_norm(n, rng, rng.uniform());
            EXPECT_LT((log_map(exp_map(u)) - u).norm(), 1e-10);
        }
}

TEST(Log, RejectsOutsideSafetyRegion) {
    const BasisSet b = build_basis(3);
    EXPECT_THROW(log_map(exp_map(2.0 * b.Z[0])), LogDomainError);
    EXPECT_NO_THROW(log_map(exp_map(0.9 * b.Z[0])));
}

TEST(Increment, SafetyBound) {
    const BasisSet b = build_basis(3);
    EXPECT_NO_THROW(check_increment(0.5 * b.Z[0]));
    EXPECT_THROW(check_increment(1.1 * b.Z[0]), StepRejected);
    // Every increment the bound admits is inside the log region.
    StreamRng rng(10);
    for (int n = 3; n <= 5; ++n)
        for (int k = 0; k < 50; ++k) {
            const AlgebraVector u = random_with_norm(n, rng, 0.999 * kIncrementSafetyBound);
            EXPECT_NO_THROW(log_map(exp_map(u)));
        }
}

TEST(GroupPoint, RejectsInvalid) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 0) = -1.0;
    EXPECT_THROW(GroupPoint{m}, std::invalid_argument);
    EXPECT_THROW(GroupPoint{2.0 * Eigen::MatrixXd::Identity(3, 3)}, std::invalid_argument);
}

TEST(Random, HaarMeanAndOrientation) {
    StreamRng rng(11);
    const int N = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < N; ++k) {
        const GroupPoint s = random_group_point(3, rng);
        sum += s(0, 0);
        sumsq += s(0, 0) * s(0, 0);
        if (k < 100) EXPECT_NEAR(s.matrix().determinant(), 1.0, 1e-12);
    }
    const double mean = sum / N;
    const double se = std::sqrt((sumsq / N - mean * mean) / N);
    EXPECT_LT(std::abs(mean), 3.0 * se);
    // E[s_11^2] = 1/n under Haar measure on SO(3).
    EXPECT_NEAR(sumsq / N, 1.0 / 3.0, 0.01);
}

TEST(Reorthonormalize, IdentityAndDefect) {
    EXPECT_LT((reorthonormalize(GroupPoint::identity(4)).matrix() - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-15);
    StreamRng rng(12);
    for (int n = 3; n <= 5; ++n) {
        Eigen::MatrixXd m = random_group_point(n, rng).matrix();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) += 1e-10 * rng.normal();
        const GroupPoint p = reorthonormalize(GroupPoint(m));
        EXPECT_LT(p.orth_defect(), 1e-14);
        EXPECT_LT((p.matrix() - m).norm(), 1e-9);
    }
}

TEST(RandomStabilizer, FixesEn) {
    StreamRng rng(13);
    const GroupPoint h = random_stabilizer_point(4, rng);
    const Eigen::VectorXd en = Eigen::VectorXd::Unit(4, 3);
    EXPECT_LT((h.matrix() * en - en).norm(), 1e-15);
    EXPECT_LT((h.matrix().transpose() * en - en).norm(), 1e-15);
}
