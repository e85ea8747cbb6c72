#include "chaplygin/nh_geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chaplygin {

namespace {

AlgebraVector vec(int n, Eigen::VectorXd c) { return AlgebraVector(n, std::move(c)); }

// (D_X mu0) u = A^*A[X, u] - [X, A^*A u].
Eigen::VectorXd dmu0_apply(const CompressedMetric& metric, const AlgebraVector& x, const AlgebraVector& u) {
    const int n = x.n();
    const Eigen::VectorXd pu = metric.project(u.coords());
    return metric.project(bracket(x, u).coords()) - bracket(x, vec(n, pu)).coords();
}

AlgebraVector nabla_nh_impl(const BallModel& model, const CompressedMetric& metric, const AlgebraVector& u,
                            const AlgebraVector& v) {
    const AlgebraVector uv = bracket(u, v);
    const Eigen::VectorXd rhs = model.gram() * nabla_I(model, u, v).coords() + metric.project(uv.coords());
    return vec(model.n(), metric.solve(rhs));
}

// Left derivative of s -> mu0(s)^{-1} y(s) where y has derivative dy.
AlgebraVector d_solve(const CompressedMetric& metric, const AlgebraVector& x, const AlgebraVector& value,
                      const Eigen::VectorXd& dy) {
    return vec(x.n(), metric.solve(Eigen::VectorXd(dy - dmu0_apply(metric, x, value))));
}

void check_point(const BallModel& model, const GroupPoint& s) {
    if (model.n() != s.n()) {
        throw std::invalid_argument("model n=" + std::to_string(model.n()) + " used at a point of SO(" +
                                    std::to_string(s.n()) + ")");
    }
}

}  // namespace

AlgebraVector nabla_I(const BallModel& model, const AlgebraVector& u, const AlgebraVector& v) {
    AlgebraVector sym = bracket(u, model.apply_inertia(v)) + bracket(v, model.apply_inertia(u));
    return 0.5 * bracket(u, v) + 0.5 * model.apply_inertia_inv(sym);
}

AlgebraVector nabla_nh(const BallModel& model, const CompressedMetric& metric, const AlgebraVector& u,
                       const AlgebraVector& v) {
    return nabla_nh_impl(model, metric, u, v);
}

AlgebraVector nabla_nh(const BallModel& model, const GroupPoint& s, const AlgebraVector& u,
                       const AlgebraVector& v) {
    return nabla_nh_impl(model, CompressedMetric(model, s), u, v);
}

AlgebraVector torsion_nh(const BallModel& model, const GroupPoint& s, const AlgebraVector& u,
                         const AlgebraVector& v) {
    const CompressedMetric metric(model, s);
    return vec(model.n(), metric.solve(Eigen::VectorXd(metric.project(bracket(u, v).coords()))));
}

// ---------------------------------------------------------------- test functions

TestFunction TestFunction::sphere_linear(const Eigen::VectorXd& c) {
    const auto n = c.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.row(n - 1) = c.transpose();
    return TestFunction(std::move(m));
}

double TestFunction::value(const GroupPoint& s) const { return c_.cwiseProduct(s.matrix()).sum(); }

double TestFunction::d1(const GroupPoint& s, const AlgebraVector& w) const {
    return c_.cwiseProduct(s.matrix() * w.matrix()).sum();
}

double TestFunction::d2(const GroupPoint& s, const AlgebraVector& w1, const AlgebraVector& w2) const {
    return c_.cwiseProduct(s.matrix() * w1.matrix() * w2.matrix()).sum();
}

// ---------------------------------------------------------------- fields

VectorField constant_field(const AlgebraVector& v) {
    return {[v](const GroupPoint&) { return v; },
            [v](const GroupPoint&, const AlgebraVector&) { return AlgebraVector(v.n()); }};
}

VectorField field_W(const BallModel& model, int i) {
    if (i < 0 || i >= model.dim()) throw std::out_of_range("field_W: index " + std::to_string(i));
    const Eigen::VectorXd iv = model.inertia_frame().col(i);
    const int n = model.n();
    VectorField f;
    f.value = [&model, iv, n](const GroupPoint& s) {
        return vec(n, CompressedMetric(model, s).solve(iv));
    };
    f.derivative = [&model, iv, n](const GroupPoint& s, const AlgebraVector& x) {
        const CompressedMetric metric(model, s);
        const AlgebraVector w = vec(n, metric.solve(iv));
        return d_solve(metric, x, w, Eigen::VectorXd::Zero(iv.size()));
    };
    return f;
}

VectorField field_U(const BallModel& model, int a) {
    if (a < 0 || a >= model.n() - 1) throw std::out_of_range("field_U: index " + std::to_string(a));
    const int n = model.n();
    VectorField f;
    f.value = [&model, a, n](const GroupPoint& s) {
        const CompressedMetric metric(model, s);
        return vec(n, metric.solve(Eigen::VectorXd(metric.zetas().col(a))));
    };
    f.derivative = [&model, a, n](const GroupPoint& s, const AlgebraVector& x) {
        const CompressedMetric metric(model, s);
        const AlgebraVector z = vec(n, metric.zetas().col(a));
        const AlgebraVector u = vec(n, metric.solve(z.coords()));
        return d_solve(metric, x, u, bracket(z, x).coords());
    };
    return f;
}

AlgebraVector fd_field_derivative(const VectorField& field, const GroupPoint& s, const AlgebraVector& x,
                                  double step) {
    const GroupPoint plus = s * exp_map(step * x);
    const GroupPoint minus = s * exp_map(-step * x);
    return (1.0 / (2.0 * step)) * (field.value(plus) - field.value(minus));
}

AlgebraVector nabla_nh_field(const BallModel& model, const GroupPoint& s, const AlgebraVector& x,
                             const VectorField& field) {
    check_point(model, s);
    return field.derivative(s, x) + nabla_nh(model, s, x, field.value(s));
}

double hessian_nh(const BallModel& model, const TestFunction& f, const GroupPoint& s, const AlgebraVector& x,
                  const AlgebraVector& y) {
    return f.d2(s, x, y) - f.d1(s, nabla_nh(model, s, x, y));
}

// ---------------------------------------------------------------- drift

DriftTerms drift_terms(const BallModel& model, const GroupPoint& s) {
    check_point(model, s);
    const int n = model.n();
    const CompressedMetric metric(model, s);
    DriftTerms t{vec(n, metric.solve(model.inertia_sum_nabla_I())), AlgebraVector(n), AlgebraVector(n)};

    for (int i = 0; i < model.dim(); ++i) {
        const AlgebraVector w = vec(n, metric.solve(Eigen::VectorXd(model.inertia_frame().col(i))));
        t.sum_W += d_solve(metric, w, w, Eigen::VectorXd::Zero(model.dim()));
        t.sum_W += nabla_nh_impl(model, metric, w, w);
    }
    for (int a = 0; a < n - 1; ++a) {
        const AlgebraVector z = vec(n, metric.zetas().col(a));
        const AlgebraVector u = vec(n, metric.solve(z.coords()));
        t.sum_U += d_solve(metric, u, u, bracket(z, u).coords());
        t.sum_U += nabla_nh_impl(model, metric, u, u);
    }
    return t;
}

AlgebraVector drift_vector(const BallModel& model, const GroupPoint& s, const NoiseConfig& noise) {
    const DriftTerms t = drift_terms(model, s);
    AlgebraVector d(model.n());
    if (noise.h0_active()) d -= 0.5 * t.inertia_term;
    if (noise.angular) d += 0.5 * t.sum_W;
    if (noise.translational) d += 0.5 * t.sum_U;
    return d;
}

double theorem_residual(const BallModel& model, const GroupPoint& s, double coeff) {
    return (drift_vector(model, s) - coeff * grad_logN(model, s)).norm();
}

double verify_identity_e0(const BallModel& model, const GroupPoint& s, double coeff) {
    const DriftTerms t = drift_terms(model, s);
    return (t.sum_W + t.sum_U - t.inertia_term - coeff * grad_logN(model, s)).norm();
}

double verify_identity_e1(const BallModel& model, const GroupPoint& s, double coeff) {
    const DriftTerms t = drift_terms(model, s);
    return (t.sum_W - t.inertia_term - coeff * grad_logN(model, s)).norm();
}

double verify_identity_e2(const BallModel& model, const GroupPoint& s) { return drift_terms(model, s).sum_U.norm(); }

// ---------------------------------------------------------------- deterministic flow

namespace {

AlgebraVector dexpinv(const AlgebraVector& theta, const AlgebraVector& u) {
    const AlgebraVector tu = bracket(theta, u);
    return u - 0.5 * tu + (1.0 / 12.0) * bracket(theta, tu);
}

AlgebraVector euler_rhs(const BallModel& model, const GroupPoint& s, const AlgebraVector& u) {
    return -mu0_inv_apply(model, s, bracket(u, model.apply_inertia(u)));
}

FlowSample sample(const BallModel& model, double t, const GroupPoint& s, const AlgebraVector& u) {
    return {t, s, u, energy(model, s, u), momentum_JH(model, s, u)};
}

}  // namespace

std::vector<FlowSample> deterministic_flow(const BallModel& model, const GroupPoint& s0, const AlgebraVector& u0,
                                           double T, double h, int record_stride, int reorth_interval) {
    check_point(model, s0);
    if (!(h > 0.0) || !(T >= 0.0)) throw std::invalid_argument("deterministic_flow: need h > 0 and T >= 0");
    if (record_stride < 1 || reorth_interval < 1) {
        throw std::invalid_argument("deterministic_flow: stride and reorth interval must be positive");
    }
    const auto steps = static_cast<long>(std::llround(T / h));

    std::vector<FlowSample> out;
    out.push_back(sample(model, 0.0, s0, u0));
    GroupPoint s = s0;
    AlgebraVector u = u0;
    for (long k = 1; k <= steps; ++k) {
        const AlgebraVector dth1 = u;
        const AlgebraVector du1 = euler_rhs(model, s, u);

        const AlgebraVector th2 = (0.5 * h) * dth1;
        const AlgebraVector u2 = u + (0.5 * h) * du1;
        const AlgebraVector dth2 = dexpinv(th2, u2);
        const AlgebraVector du2 = euler_rhs(model, s * exp_map(th2), u2);

        const AlgebraVector th3 = (0.5 * h) * dth2;
        const AlgebraVector u3 = u + (0.5 * h) * du2;
        const AlgebraVector dth3 = dexpinv(th3, u3);
        const AlgebraVector du3 = euler_rhs(model, s * exp_map(th3), u3);

        const AlgebraVector th4 = h * dth3;
        const AlgebraVector u4 = u + h * du3;
        const AlgebraVector dth4 = dexpinv(th4, u4);
        const AlgebraVector du4 = euler_rhs(model, s * exp_map(th4), u4);

        const AlgebraVector theta = (h / 6.0) * (dth1 + 2.0 * dth2 + 2.0 * dth3 + dth4);
        check_increment(theta);
        u += (h / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4);
        s = s * exp_map(theta);
        if (k % reorth_interval == 0 || s.orth_defect() > 1e-10) s = reorthonormalize(s);

        if (k % record_stride == 0 || k == steps) out.push_back(sample(model, static_cast<double>(k) * h, s, u));
    }
    return out;
}

}  // namespace chaplygin
