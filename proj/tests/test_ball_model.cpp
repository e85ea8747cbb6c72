#include <gtest/gtest.h>

#include <cmath>

#include "chaplygin/ball_model.hpp"
#include "chaplygin/rng.hpp"
#include "oracles.hpp"

using namespace chaplygin;

namespace {

BallModel random_model(int n, std::uint64_t seed) {
    StreamRng rng(seed);
    return BallModel(random_inertia(n, rng));
}

}  // namespace

TEST(Inertia, PhysicalHalfMassesIsIdentity) {
    for (int n = 3; n <= 5; ++n) {
        const InertiaOperator in = physical_inertia(n, std::vector<double>(n, 0.5));
        const int m = algebra_dim(n);
        EXPECT_LT((in.gram() - Eigen::MatrixXd::Identity(m, m)).norm(), 1e-15);
    }
}

TEST(Inertia, PhysicalIsDiagonalPairSums) {
    const std::vector<double> lam{1.0, 2.0, 3.0};
    const InertiaOperator in = physical_inertia(3, lam);
    const auto pairs = basis_pairs(3);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            const double want = k == l ? lam[pairs[k].first] + lam[pairs[k].second] : 0.0;
            EXPECT_NEAR(in.gram()(k, l), want, 1e-14);
        }
}

TEST(Inertia, RejectsBadInput) {
    EXPECT_THROW(physical_inertia(3, {1.0, -1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(InertiaOperator(3, Eigen::MatrixXd::Identity(4, 4)), std::invalid_argument);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.3;
    EXPECT_THROW(InertiaOperator(3, asym), std::invalid_argument);
    EXPECT_THROW(InertiaOperator(3, -Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(Inertia, RandomIsConditionBounded) {
    StreamRng rng(3);
    for (int k = 0; k < 20; ++k) {
        const InertiaOperator in = random_inertia(4, rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(in.gram());
        EXPECT_GE(es.eigenvalues().minCoeff(), 0.5 - 1e-12);
        EXPECT_LE(es.eigenvalues().maxCoeff(), 5.0 + 1e-12);
    }
}

TEST(Model, FrameIsInertiaOrthonormal) {
    const BallModel model = random_model(4, 11);
    const int m = model.dim();
    const Eigen::MatrixXd f = model.frame();
    EXPECT_LT((f.transpose() * model.gram() * f - Eigen::MatrixXd::Identity(m, m)).norm(), 1e-12);
    EXPECT_LT((model.inertia_frame() - model.gram() * f).norm(), 1e-12);
}

TEST(Model, SumNablaIndependentOfFrame) {
    StreamRng rng(12);
    const InertiaOperator in = random_inertia(4, rng);
    const BallModel a(in);
    const BallModel b(in, random_orthogonal(a.dim(), rng, false));
    EXPECT_LT((a.sum_nabla_I() - b.sum_nabla_I()).norm(), 1e-12);
    EXPECT_LT((compute_sum_nabla_I(b) - a.sum_nabla_I()).norm(), 1e-12);
}

TEST(Frames, ZetaXiOrthonormalAndComplementary) {
    StreamRng rng(4);
    for (int n = 3; n <= 5; ++n) {
        const GroupPoint s = random_group_point(n, rng);
        Eigen::MatrixXd all(algebra_dim(n), algebra_dim(n));
        all << xi_matrix(s), zeta_matrix(s);
        EXPECT_LT((all.transpose() * all - Eigen::MatrixXd::Identity(all.cols(), all.cols())).norm(), 1e-12);
        // zeta_a(s) = s^T Z_a s by direct matrix products.
        const auto basis = oracle::basis_matrices(n);
        for (int a = 0; a < n - 1; ++a) {
            const Eigen::MatrixXd z = s.matrix().transpose() * basis[stabilizer_dim(n) + a] * s.matrix();
            EXPECT_LT((zeta(s, a).matrix() - z).norm(), 1e-12);
        }
    }
}

TEST(Frames, AstarAIsProjection) {
    StreamRng rng(5);
    const GroupPoint s = random_group_point(4, rng);
    const AlgebraVector u = random_algebra_vector(4, rng);
    const AlgebraVector p = astar_a(s, u);
    EXPECT_LT((astar_a(s, p) - p).norm(), 1e-12);
    for (int al = 0; al < stabilizer_dim(4); ++al) EXPECT_NEAR(inner(p, xi(s, al)), 0.0, 1e-12);
}

TEST(Metric, IdentityCaseAtIdentity) {
    for (int n = 3; n <= 5; ++n) {
        const BallModel model(InertiaOperator::identity(n));
        const Eigen::MatrixXd mu = mu0_matrix(model, GroupPoint::identity(n));
        Eigen::VectorXd d = Eigen::VectorXd::Ones(model.dim());
        d.tail(n - 1).setConstant(2.0);
        EXPECT_LT((mu - Eigen::MatrixXd(d.asDiagonal())).norm(), 1e-14);
        EXPECT_NEAR(density_N(model, GroupPoint::identity(n)), std::pow(2.0, -(n - 1) / 2.0), 1e-14);
    }
}

TEST(Metric, AgreesWithOracle) {
    StreamRng rng(6);
    for (int n = 3; n <= 5; ++n) {
        const BallModel model = random_model(n, 100 + n);
        for (int k = 0; k < 10; ++k) {
            const GroupPoint s = random_group_point(n, rng);
            EXPECT_LT((mu0_matrix(model, s) - oracle::mu0(model.gram(), s.matrix())).norm(), 1e-12);
            EXPECT_NEAR(log_density(model, s), oracle::log_N(model.gram(), s.matrix()), 1e-12);
            const AlgebraVector u = random_algebra_vector(n, rng);
            EXPECT_LT((mu0_apply(model, s, mu0_inv_apply(model, s, u)) - u).norm(), 1e-12);
        }
    }
}

TEST(Metric, IdentityDensityIsHInvariant) {
    // With identity inertia N depends on s only through kappa(s), and is in
    // fact constant.
    StreamRng rng(7);
    const BallModel model(InertiaOperator::identity(4));
    for (int k = 0; k < 10; ++k)
        EXPECT_NEAR(density_N(model, random_group_point(4, rng)), std::pow(2.0, -1.5), 1e-13);
}

TEST(Metric, DensityLeftHInvariant) {
    StreamRng rng(8);
    const BallModel model = random_model(4, 9);
    for (int k = 0; k < 10; ++k) {
        const GroupPoint s = random_group_point(4, rng);
        const GroupPoint h = random_stabilizer_point(4, rng);
        EXPECT_NEAR(log_density(model, h * s), log_density(model, s), 1e-12);
    }
}

TEST(Density, DlogNMatchesFiniteDifference) {
    StreamRng rng(13);
    for (int n = 3; n <= 5; ++n) {
        const BallModel model = random_model(n, 200 + n);
        for (int k = 0; k < 20; ++k) {
            const GroupPoint s = random_group_point(n, rng);
            const AlgebraVector x = random_algebra_vector(n, rng);
            EXPECT_NEAR(dlogN_apply(model, s, x), oracle::dlogN_fd(model.gram(), s.matrix(), x.matrix()), 1e-7);
        }
    }
}

TEST(Density, DlogNVanishesOnXi) {
    StreamRng rng(14);
    const BallModel model = random_model(5, 15);
    const GroupPoint s = random_group_point(5, rng);
    for (int al = 0; al < stabilizer_dim(5); ++al) EXPECT_NEAR(dlogN_apply(model, s, xi(s, al)), 0.0, 1e-12);
}

TEST(Density, GradientAgainstOracle) {
    StreamRng rng(16);
    const BallModel model = random_model(4, 17);
    for (int k = 0; k < 5; ++k) {
        const GroupPoint s = random_group_point(4, rng);
        EXPECT_LT((grad_logN(model, s).coords() - oracle::grad_logN_fd(model.gram(), s.matrix())).norm(), 1e-7);
        EXPECT_LT((dlogN_coeffs(model, s) + bracket_trace_coeffs(model, s)).norm(), 1e-15);
    }
}

TEST(Hamiltonization, HoldsForNThree) {
    StreamRng rng(18);
    for (int k = 0; k < 10; ++k) {
        const BallModel model(random_inertia(3, rng));
        EXPECT_LT(ham_condition_residual(model), 1e-10);
        EXPECT_LT(ham_condition_residual(model, random_group_point(3, rng)), 1e-10);
    }
}

TEST(Hamiltonization, IdentityHoldsAndRandomFailsInHigherDimensions) {
    StreamRng rng(19);
    for (int n = 4; n <= 5; ++n) {
        EXPECT_LT(ham_condition_residual(BallModel(InertiaOperator::identity(n))), 1e-12);
        EXPECT_GT(ham_condition_residual(BallModel(random_inertia(n, rng))), 1e-3);
    }
}

TEST(Derivative, Mu0AlongLeftDirection) {
    StreamRng rng(20);
    const BallModel model = random_model(4, 21);
    const GroupPoint s = random_group_point(4, rng);
    const AlgebraVector x = random_algebra_vector(4, rng);
    const double h = 1e-5;
    const Eigen::MatrixXd sp = s.matrix() * oracle::expm(h * x.matrix());
    const Eigen::MatrixXd sm = s.matrix() * oracle::expm(-h * x.matrix());
    const Eigen::MatrixXd fd = (oracle::mu0(model.gram(), sp) - oracle::mu0(model.gram(), sm)) / (2.0 * h);
    EXPECT_LT((left_derivative_mu0(s, x) - fd).norm(), 1e-8);
    const Eigen::MatrixXd inv = mu0_matrix(model, s).inverse();
    EXPECT_LT((left_derivative_mu0_inv(model, s, x) + inv * fd * inv).norm(), 1e-8);
}

TEST(Derivative, AdMatrix) {
    StreamRng rng(22);
    const AlgebraVector x = random_algebra_vector(4, rng);
    const AlgebraVector u = random_algebra_vector(4, rng);
    EXPECT_LT((ad_matrix(x) * u.coords() - bracket(x, u).coords()).norm(), 1e-14);
}

TEST(Hamiltonians, EnergyAndMomentum) {
    StreamRng rng(23);
    const BallModel model = random_model(3, 24);
    const GroupPoint s = random_group_point(3, rng);
    const AlgebraVector u = random_algebra_vector(3, rng);
    EXPECT_NEAR(energy(model, s, u), 0.5 * u.coords().dot(mu0_matrix(model, s) * u.coords()), 1e-13);
    double h2 = 0.0;
    for (int i = 0; i < model.dim(); ++i) h2 += std::pow(hamiltonian_h(model, i, u), 2);
    double f2 = 0.0;
    for (int a = 0; a < 2; ++a) f2 += std::pow(hamiltonian_f(s, a, u), 2);
    // sum H_i^2 = <I u, u> and sum F_a^2 = <A^*A u, u>.
    EXPECT_NEAR(h2, u.coords().dot(model.gram() * u.coords()), 1e-12);
    EXPECT_NEAR(f2, inner(astar_a(s, u), u), 1e-12);
    EXPECT_NEAR(hamiltonian_h0(model, u), -0.5 * u.coords().dot(model.inertia_sum_nabla_I()), 1e-14);
}

TEST(Model, SumNablaVanishesOnUnimodularAlgebra) {
    // sum_i [v_i, I v_i] is the bracket contracted with the identity map.
    for (int n = 3; n <= 5; ++n) EXPECT_LT(random_model(n, 30 + n).sum_nabla_I().norm(), 1e-12);
}

TEST(Momentum, IdentityAtIdentityIsCoordinate) {
    const BallModel model(InertiaOperator::identity(4));
    const GroupPoint e = GroupPoint::identity(4);
    const BasisSet& b = model.basis();
    for (int be = 0; be < stabilizer_dim(4); ++be) {
        const Eigen::VectorXd j = momentum_JH(model, e, b.Y[be]);
        for (int al = 0; al < stabilizer_dim(4); ++al) EXPECT_NEAR(j[al], al == be ? 1.0 : 0.0, 1e-14);
    }
}
