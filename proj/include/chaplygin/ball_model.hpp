#ifndef CHAPLYGIN_BALL_MODEL_HPP
#define CHAPLYGIN_BALL_MODEL_HPP

#include <vector>

#include <Eigen/Dense>

#include "chaplygin/lie_kernel.hpp"

namespace chaplygin {

class StreamRng;

/// Inertia operator I of the ball as a symmetric positive-definite gram
/// matrix in the adapted (Y, Z) basis: <I u, v> = u^T gram v.
class InertiaOperator {
public:
    /// Throws std::invalid_argument if gram is not square of size n(n-1)/2,
    /// not symmetric, or not positive definite.
    InertiaOperator(int n, Eigen::MatrixXd gram);

    static InertiaOperator identity(int n);

    int n() const { return n_; }
    const Eigen::MatrixXd& gram() const { return gram_; }

private:
    int n_;
    Eigen::MatrixXd gram_;
};

/// u -> diag(masses) u + u diag(masses). Throws for non-positive masses.
InertiaOperator physical_inertia(int n, const std::vector<double>& masses);

/// gram = Q D Q^T, Q Haar on O(m), eigenvalues log-uniform in [lo, hi].
InertiaOperator random_inertia(int n, StreamRng& rng, double lo = 0.5, double hi = 5.0);

/// Immutable Chaplygin ball data: basis, inertia, an I-orthonormal frame
/// {v_i} and the cached sum of nabla^I_{v_i} v_i.
class BallModel {
public:
    explicit BallModel(InertiaOperator inertia);
    /// Uses the frame V R instead of V for an orthogonal m x m matrix R.
    /// Frame sums are independent of R; this exists to test that.
    BallModel(InertiaOperator inertia, const Eigen::MatrixXd& frame_rotation);

    int n() const { return n_; }
    int dim() const { return algebra_dim(n_); }
    int stabilizer_dim() const { return chaplygin::stabilizer_dim(n_); }

    const BasisSet& basis() const { return basis_; }
    const InertiaOperator& inertia() const { return inertia_; }
    const Eigen::MatrixXd& gram() const { return inertia_.gram(); }

    /// Columns are the coordinates of v_i; frame^T gram frame = 1.
    const Eigen::MatrixXd& frame() const { return frame_; }
    /// gram * frame, i.e. the columns I v_i.
    const Eigen::MatrixXd& inertia_frame() const { return inertia_frame_; }
    const std::vector<AlgebraVector>& v_frame() const { return v_frame_; }

    /// sum_i nabla^I_{v_i} v_i.
    const AlgebraVector& sum_nabla_I() const { return sum_nabla_I_; }
    /// I applied to sum_nabla_I().
    const Eigen::VectorXd& inertia_sum_nabla_I() const { return inertia_sum_nabla_I_; }

    AlgebraVector apply_inertia(const AlgebraVector& u) const;
    AlgebraVector apply_inertia_inv(const AlgebraVector& u) const;

private:
    void init_frame(const Eigen::MatrixXd& rotation);

    int n_;
    BasisSet basis_;
    InertiaOperator inertia_;
    Eigen::LLT<Eigen::MatrixXd> gram_llt_;
    Eigen::MatrixXd frame_;
    Eigen::MatrixXd inertia_frame_;
    std::vector<AlgebraVector> v_frame_;
    AlgebraVector sum_nabla_I_;
    Eigen::VectorXd inertia_sum_nabla_I_;
};

/// Recomputes sum_i nabla^I_{v_i} v_i from the model's frame.
AlgebraVector compute_sum_nabla_I(const BallModel& model);

// Right-invariant frames, 0-based indices: a < n-1, alpha < k.
AlgebraVector zeta(const GroupPoint& s, int a);
AlgebraVector xi(const GroupPoint& s, int alpha);
/// Columns are the coordinates of zeta_a(s), a = 0..n-2.
Eigen::MatrixXd zeta_matrix(const GroupPoint& s);
/// Columns are the coordinates of xi_alpha(s).
Eigen::MatrixXd xi_matrix(const GroupPoint& s);

/// A_s^* A_s u = sum_a <zeta_a(s), u> zeta_a(s).
AlgebraVector astar_a(const GroupPoint& s, const AlgebraVector& u);

/// mu0(s) = I + A_s^* A_s evaluated at one point, with its Cholesky factor.
class CompressedMetric {
public:
    CompressedMetric(const BallModel& model, const GroupPoint& s);

    const Eigen::MatrixXd& matrix() const { return mu0_; }
    const Eigen::MatrixXd& zetas() const { return zetas_; }
    const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return mu0_ * u; }
    Eigen::VectorXd solve(const Eigen::VectorXd& u) const { return llt_.solve(u); }
    Eigen::MatrixXd solve(const Eigen::MatrixXd& u) const { return llt_.solve(u); }
    /// A^*A applied in coordinates.
    Eigen::VectorXd project(const Eigen::VectorXd& u) const { return zetas_ * (zetas_.transpose() * u); }

private:
    Eigen::MatrixXd zetas_;
    Eigen::MatrixXd mu0_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

AlgebraVector mu0_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u);
Eigen::MatrixXd mu0_matrix(const BallModel& model, const GroupPoint& s);
/// Solves mu0(s) x = u. Throws std::runtime_error if the factorization fails.
AlgebraVector mu0_inv_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u);

/// N(s) = det(mu0(s))^{-1/2}.
double density_N(const BallModel& model, const GroupPoint& s);
double log_density(const BallModel& model, const GroupPoint& s);

/// The vector sum_a [mu0^{-1} zeta_a, zeta_a] paired with zeta_b:
/// c_b = sum_a <[mu0^{-1} zeta_a, zeta_a], zeta_b>.
Eigen::VectorXd bracket_trace_coeffs(const BallModel& model, const GroupPoint& s);
/// Coefficients of d log N in the coframe eta^b = <zeta_b, .>. These are
/// the negatives of bracket_trace_coeffs; the finite-difference tests pin
/// the sign.
Eigen::VectorXd dlogN_coeffs(const BallModel& model, const GroupPoint& s);
/// d log N evaluated on a left-trivialized tangent vector.
double dlogN_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u);
/// mu0-gradient of log N: mu0^{-1} sum_b c_b zeta_b.
AlgebraVector grad_logN(const BallModel& model, const GroupPoint& s);

/// J_H(s, u)_alpha = <xi_alpha(s), I u>.
Eigen::VectorXd momentum_JH(const BallModel& model, const GroupPoint& s, const AlgebraVector& u);

/// Max over b, c, d of the defect in the Hamiltonization condition
/// (n-2)<mu0^{-1} zeta_d, [zeta_b, zeta_c]>
///   = sum_a <mu0^{-1} zeta_a, [zeta_b, zeta_a] delta_cd - [zeta_c, zeta_a] delta_bd>.
double ham_condition_residual(const BallModel& model, const GroupPoint& s);
/// Same, evaluated at s = identity.
double ham_condition_residual(const BallModel& model);
/// Tolerance below which the condition counts as satisfied.
constexpr double kHamSatisfiedTol = 1e-8;

/// Matrix (in coordinates) of ad_X: u -> [X, u].
Eigen::MatrixXd ad_matrix(const AlgebraVector& x);

/// Derivative of mu0 along the left-invariant direction X at s:
/// u -> A^*A[X, u] - [X, A^*A u].
Eigen::MatrixXd left_derivative_mu0(const GroupPoint& s, const AlgebraVector& x);
/// Derivative of mu0^{-1}: -mu0^{-1} (X.mu0) mu0^{-1}.
Eigen::MatrixXd left_derivative_mu0_inv(const BallModel& model, const GroupPoint& s,
                                        const AlgebraVector& x);

// Compressed Hamiltonians on TK = K x so(n).
double hamiltonian_h0(const BallModel& model, const AlgebraVector& u);
double hamiltonian_h(const BallModel& model, int i, const AlgebraVector& u);
double hamiltonian_f(const GroupPoint& s, int a, const AlgebraVector& u);

/// Kinetic energy 1/2 mu0(s)(u, u).
double energy(const BallModel& model, const GroupPoint& s, const AlgebraVector& u);

}  // namespace chaplygin

#endif  // CHAPLYGIN_BALL_MODEL_HPP
