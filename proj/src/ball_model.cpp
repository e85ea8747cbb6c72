#include "chaplygin/ball_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chaplygin/rng.hpp"

namespace chaplygin {

namespace {

// Coordinates of Ad(s^{-1}) (E_pq - E_qp) = s^T (E_pq - E_qp) s.
Eigen::VectorXd ad_inv_basis(const Eigen::MatrixXd& s, int p, int q) {
    const int n = static_cast<int>(s.rows());
    Eigen::VectorXd c(algebra_dim(n));
    int k = 0;
    for (const auto& [i, j] : basis_pairs(n)) c[k++] = s(p, i) * s(q, j) - s(q, i) * s(p, j);
    return c;
}

void check_model_point(const BallModel& model, const GroupPoint& s) {
    if (model.n() != s.n()) {
        throw std::invalid_argument("ball model n=" + std::to_string(model.n()) +
                                    " evaluated at a point of SO(" + std::to_string(s.n()) + ")");
    }
}

}  // namespace

// ---------------------------------------------------------------- inertia

InertiaOperator::InertiaOperator(int n, Eigen::MatrixXd gram) : n_(n), gram_(std::move(gram)) {
    const int m = algebra_dim(n);
    if (n < 3) throw std::invalid_argument("InertiaOperator: n must be >= 3");
    if (gram_.rows() != m || gram_.cols() != m) {
        throw std::invalid_argument("InertiaOperator: gram must be " + std::to_string(m) + "x" +
                                    std::to_string(m) + " for n=" + std::to_string(n));
    }
    const double asym = (gram_ - gram_.transpose()).norm();
    if (asym > 1e-12 * std::max(1.0, gram_.norm())) {
        throw std::invalid_argument("InertiaOperator: gram is not symmetric (asymmetry " +
                                    std::to_string(asym) + ")");
    }
    gram_ = 0.5 * (gram_ + gram_.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram_, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    if (!(lmin > 0.0)) {
        throw std::invalid_argument("InertiaOperator: gram is not positive definite (min eigenvalue " +
                                    std::to_string(lmin) + ")");
    }
}

InertiaOperator InertiaOperator::identity(int n) {
    return InertiaOperator(n, Eigen::MatrixXd::Identity(algebra_dim(n), algebra_dim(n)));
}

InertiaOperator physical_inertia(int n, const std::vector<double>& masses) {
    if (static_cast<int>(masses.size()) != n) {
        throw std::invalid_argument("physical_inertia: expected " + std::to_string(n) + " masses");
    }
    for (double mass : masses)
        if (!(mass > 0.0)) throw std::invalid_argument("physical_inertia: masses must be positive");
    const Eigen::MatrixXd lambda =
        Eigen::Map<const Eigen::VectorXd>(masses.data(), n).asDiagonal();
    const BasisSet basis = build_basis(n);
    const int m = algebra_dim(n);
    Eigen::MatrixXd gram(m, m);
    for (int l = 0; l < m; ++l) {
        const Eigen::MatrixXd b = basis.element(l).matrix();
        gram.col(l) = AlgebraVector::from_matrix(lambda * b + b * lambda).coords();
    }
    return InertiaOperator(n, gram);
}

InertiaOperator random_inertia(int n, StreamRng& rng, double lo, double hi) {
    const int m = algebra_dim(n);
    const Eigen::MatrixXd q = random_orthogonal(m, rng, false);
    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i) d[i] = std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
    Eigen::MatrixXd gram = q * d.asDiagonal() * q.transpose();
    gram = 0.5 * (gram + gram.transpose());
    return InertiaOperator(n, gram);
}

// ---------------------------------------------------------------- model

BallModel::BallModel(InertiaOperator inertia)
    : n_(inertia.n()), basis_(build_basis(inertia.n())), inertia_(std::move(inertia)) {
    init_frame(Eigen::MatrixXd::Identity(dim(), dim()));
}

BallModel::BallModel(InertiaOperator inertia, const Eigen::MatrixXd& frame_rotation)
    : n_(inertia.n()), basis_(build_basis(inertia.n())), inertia_(std::move(inertia)) {
    if (frame_rotation.rows() != dim() || frame_rotation.cols() != dim() ||
        orthogonality_defect(frame_rotation) > 1e-10) {
        throw std::invalid_argument("BallModel: frame rotation must be an orthogonal m x m matrix");
    }
    init_frame(frame_rotation);
}

void BallModel::init_frame(const Eigen::MatrixXd& rotation) {
    const int m = dim();
    gram_llt_.compute(gram());
    // gram = L L^T, frame = L^{-T}: frame^T gram frame = 1.
    const Eigen::MatrixXd lower = gram_llt_.matrixL();
    frame_ = lower.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(m, m)) * rotation;
    inertia_frame_ = gram() * frame_;
    v_frame_.clear();
    for (int i = 0; i < m; ++i) v_frame_.emplace_back(n_, frame_.col(i));
    sum_nabla_I_ = compute_sum_nabla_I(*this);
    inertia_sum_nabla_I_ = gram() * sum_nabla_I_.coords();
}

AlgebraVector BallModel::apply_inertia(const AlgebraVector& u) const {
    return AlgebraVector(n_, gram() * u.coords());
}

AlgebraVector BallModel::apply_inertia_inv(const AlgebraVector& u) const {
    return AlgebraVector(n_, gram_llt_.solve(u.coords()));
}

AlgebraVector compute_sum_nabla_I(const BallModel& model) {
    // nabla^I_v v = I^{-1} [v, I v].
    AlgebraVector sum(model.n());
    for (const auto& v : model.v_frame()) sum += bracket(v, model.apply_inertia(v));
    return model.apply_inertia_inv(sum);
}

// ---------------------------------------------------------------- frames

AlgebraVector zeta(const GroupPoint& s, int a) {
    const int n = s.n();
    if (a < 0 || a >= n - 1) throw std::out_of_range("zeta: index " + std::to_string(a) + " out of range");
    return AlgebraVector(n, ad_inv_basis(s.matrix(), a, n - 1));
}

AlgebraVector xi(const GroupPoint& s, int alpha) {
    const int n = s.n();
    if (alpha < 0 || alpha >= stabilizer_dim(n)) {
        throw std::out_of_range("xi: index " + std::to_string(alpha) + " out of range");
    }
    const auto [p, q] = basis_pairs(n)[static_cast<std::size_t>(alpha)];
    return AlgebraVector(n, ad_inv_basis(s.matrix(), p, q));
}

Eigen::MatrixXd zeta_matrix(const GroupPoint& s) {
    const int n = s.n();
    Eigen::MatrixXd z(algebra_dim(n), n - 1);
    for (int a = 0; a < n - 1; ++a) z.col(a) = ad_inv_basis(s.matrix(), a, n - 1);
    return z;
}

Eigen::MatrixXd xi_matrix(const GroupPoint& s) {
    const int n = s.n();
    const int k = stabilizer_dim(n);
    const auto pairs = basis_pairs(n);
    Eigen::MatrixXd x(algebra_dim(n), k);
    for (int alpha = 0; alpha < k; ++alpha) {
        const auto [p, q] = pairs[static_cast<std::size_t>(alpha)];
        x.col(alpha) = ad_inv_basis(s.matrix(), p, q);
    }
    return x;
}

AlgebraVector astar_a(const GroupPoint& s, const AlgebraVector& u) {
    if (s.n() != u.n()) throw std::invalid_argument("astar_a: dimension mismatch");
    const Eigen::MatrixXd z = zeta_matrix(s);
    return AlgebraVector(s.n(), z * (z.transpose() * u.coords()));
}

// ---------------------------------------------------------------- mu0

CompressedMetric::CompressedMetric(const BallModel& model, const GroupPoint& s)
    : zetas_((check_model_point(model, s), zeta_matrix(s))),
      mu0_(model.gram() + zetas_ * zetas_.transpose()),
      llt_(mu0_) {
    if (llt_.info() != Eigen::Success) {
        throw std::runtime_error("CompressedMetric: Cholesky factorization of mu0 failed");
    }
}

AlgebraVector mu0_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    return AlgebraVector(model.n(), CompressedMetric(model, s).apply(u.coords()));
}

Eigen::MatrixXd mu0_matrix(const BallModel& model, const GroupPoint& s) {
    return CompressedMetric(model, s).matrix();
}

AlgebraVector mu0_inv_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    return AlgebraVector(model.n(), CompressedMetric(model, s).solve(u.coords()));
}

double log_density(const BallModel& model, const GroupPoint& s) {
    const CompressedMetric metric(model, s);
    // log det = 2 sum log diag(L).
    const Eigen::MatrixXd lower = metric.llt().matrixL();
    return -lower.diagonal().array().log().sum();
}

double density_N(const BallModel& model, const GroupPoint& s) { return std::exp(log_density(model, s)); }

Eigen::VectorXd bracket_trace_coeffs(const BallModel& model, const GroupPoint& s) {
    const CompressedMetric metric(model, s);
    const int n = model.n();
    const Eigen::MatrixXd& z = metric.zetas();
    const Eigen::MatrixXd w = metric.solve(z);
    AlgebraVector sum(n);
    for (int a = 0; a < n - 1; ++a) sum += bracket(AlgebraVector(n, w.col(a)), AlgebraVector(n, z.col(a)));
    return z.transpose() * sum.coords();
}

Eigen::VectorXd dlogN_coeffs(const BallModel& model, const GroupPoint& s) {
    return -bracket_trace_coeffs(model, s);
}

double dlogN_apply(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    return dlogN_coeffs(model, s).dot(zeta_matrix(s).transpose() * u.coords());
}

AlgebraVector grad_logN(const BallModel& model, const GroupPoint& s) {
    const CompressedMetric metric(model, s);
    const Eigen::VectorXd c = dlogN_coeffs(model, s);
    return AlgebraVector(model.n(), metric.solve(Eigen::VectorXd(metric.zetas() * c)));
}

Eigen::VectorXd momentum_JH(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    check_model_point(model, s);
    return xi_matrix(s).transpose() * (model.gram() * u.coords());
}

double ham_condition_residual(const BallModel& model, const GroupPoint& s) {
    const CompressedMetric metric(model, s);
    const int n = model.n();
    const int r = n - 1;
    const Eigen::MatrixXd& z = metric.zetas();
    const Eigen::MatrixXd w = metric.solve(z);  // columns mu0^{-1} zeta_a

    std::vector<std::vector<Eigen::VectorXd>> br(static_cast<std::size_t>(r),
                                                 std::vector<Eigen::VectorXd>(static_cast<std::size_t>(r)));
    for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c)
            br[b][c] = bracket(AlgebraVector(n, z.col(b)), AlgebraVector(n, z.col(c))).coords();

    double worst = 0.0;
    for (int b = 0; b < r; ++b) {
        for (int c = 0; c < r; ++c) {
            for (int d = 0; d < r; ++d) {
                const double lhs = (n - 2) * w.col(d).dot(br[b][c]);
                double rhs = 0.0;
                for (int a = 0; a < r; ++a) {
                    if (c == d) rhs += w.col(a).dot(br[b][a]);
                    if (b == d) rhs -= w.col(a).dot(br[c][a]);
                }
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

double ham_condition_residual(const BallModel& model) {
    return ham_condition_residual(model, GroupPoint::identity(model.n()));
}

Eigen::MatrixXd ad_matrix(const AlgebraVector& x) {
    const int n = x.n();
    const int m = algebra_dim(n);
    Eigen::MatrixXd ad(m, m);
    const Eigen::MatrixXd xm = x.matrix();
    for (int l = 0; l < m; ++l) {
        const Eigen::MatrixXd b = AlgebraVector(n, Eigen::VectorXd::Unit(m, l)).matrix();
        ad.col(l) = AlgebraVector::from_matrix(xm * b - b * xm).coords();
    }
    return ad;
}

Eigen::MatrixXd left_derivative_mu0(const GroupPoint& s, const AlgebraVector& x) {
    if (s.n() != x.n()) throw std::invalid_argument("left_derivative_mu0: dimension mismatch");
    const Eigen::MatrixXd z = zeta_matrix(s);
    const Eigen::MatrixXd proj = z * z.transpose();
    const Eigen::MatrixXd ad = ad_matrix(x);
    return proj * ad - ad * proj;
}

Eigen::MatrixXd left_derivative_mu0_inv(const BallModel& model, const GroupPoint& s,
                                        const AlgebraVector& x) {
    const CompressedMetric metric(model, s);
    const Eigen::MatrixXd d = left_derivative_mu0(s, x);
    const Eigen::MatrixXd left = metric.solve(d);
    // mu0^{-1} D mu0^{-1} = (mu0^{-1} (mu0^{-1} D)^T)^T by symmetry of mu0.
    return -metric.solve(Eigen::MatrixXd(left.transpose())).transpose();
}

// ---------------------------------------------------------------- Hamiltonians

double hamiltonian_h0(const BallModel& model, const AlgebraVector& u) {
    return -0.5 * u.coords().dot(model.inertia_sum_nabla_I());
}

double hamiltonian_h(const BallModel& model, int i, const AlgebraVector& u) {
    if (i < 0 || i >= model.dim()) throw std::out_of_range("hamiltonian_h: index out of range");
    return u.coords().dot(model.inertia_frame().col(i));
}

double hamiltonian_f(const GroupPoint& s, int a, const AlgebraVector& u) { return -inner(zeta(s, a), u); }

double energy(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    return 0.5 * u.coords().dot(CompressedMetric(model, s).apply(u.coords()));
}

}  // namespace chaplygin
