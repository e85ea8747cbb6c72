#include "chaplygin/diffusion_lab.hpp"

#include <cmath>
#include <limits>
#include <tuple>
#include <stdexcept>

namespace chaplygin {

SampleStats sample_stats(const std::vector<double>& xs) {
    SampleStats st;
    st.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return st;
    double sum = 0.0;
    for (double x : xs) sum += x;
    st.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        st.stderr_ = std::numeric_limits<double>::infinity();
        return st;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    st.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    return st;
}

// ---------------------------------------------------------------- generators

namespace {

// P.(P.f) for a field P given its value p at s and D_p P.
double second_order(const TestFunction& f, const GroupPoint& s, const AlgebraVector& p, const AlgebraVector& dpp) {
    return f.d2(s, p, p) + f.d1(s, dpp);
}

}  // namespace

double apply_generator(const BallModel& model, const TestFunction& f, const GroupPoint& s, const NoiseConfig& noise) {
    double total = 0.0;
    if (noise.h0_active()) {
        total += f.d1(s, -0.5 * mu0_inv_apply(model, s, model.apply_inertia(model.sum_nabla_I())));
    }
    if (noise.angular) {
        for (int i = 0; i < model.dim(); ++i) {
            const VectorField w = field_W(model, i);
            const AlgebraVector p = w.value(s);
            total += 0.5 * second_order(f, s, p, w.derivative(s, p));
        }
    }
    if (noise.translational) {
        // U_a = -mu0^{-1} zeta_a; the second-order term is even in the sign.
        for (int a = 0; a < model.n() - 1; ++a) {
            const VectorField u = field_U(model, a);
            const AlgebraVector p = u.value(s);
            total += 0.5 * second_order(f, s, p, u.derivative(s, p));
        }
    }
    return total;
}

double generator_regrouped(const BallModel& model, const TestFunction& f, const GroupPoint& s,
                           const NoiseConfig& noise) {
    double total = f.d1(s, drift_vector(model, s, noise));
    const NhFields fields = nh_vector_fields(model, s);
    if (noise.angular)
        for (const auto& v : fields.V) total += 0.5 * hessian_nh(model, f, s, v, v);
    if (noise.translational)
        for (const auto& u : fields.U) total += 0.5 * hessian_nh(model, f, s, u, u);
    return total;
}

double apply_q_generator(const BallModel& model, const TestFunction& f, const GroupPoint& s) {
    double total = -0.5 * f.d1(s, model.sum_nabla_I());
    for (const auto& v : model.v_frame()) total += 0.5 * f.d2(s, v, v);
    return total;
}

bool GeneratorReport::within(double rel_budget) const {
    if (!std::isfinite(stderr_) || !std::isfinite(mc_estimate)) return false;
    return std::abs(mc_estimate - analytic) <= 3.0 * stderr_ + rel_budget * std::abs(analytic);
}

GeneratorReport mc_generator_estimate(const BallModel& model, const TestFunction& f, const GroupPoint& s0,
                                      const IntegratorConfig& cfg, const NoiseConfig& noise, int workers) {
    cfg.validate();
    const double f0 = f.value(s0);
    std::vector<double> diffs(static_cast<std::size_t>(cfg.path_count));
    run_paths(model, s0, 1, cfg, noise, workers, [&](std::int64_t p, int k, const GroupPoint& s) {
        if (k == 1) diffs[static_cast<std::size_t>(p)] = (f.value(s) - f0) / cfg.h;
    });
    const SampleStats st = sample_stats(diffs);
    return {s0, f, apply_generator(model, f, s0, noise), st.mean, st.stderr_, cfg.h, cfg.path_count};
}

GeneratorReport mc_q_generator_estimate(const BallModel& model, const TestFunction& f, const GroupPoint& s0,
                                        const IntegratorConfig& cfg, int workers) {
    const QState q0{s0, Eigen::VectorXd::Zero(model.n() - 1)};
    const std::vector<QState> out = simulate_q_ensemble(model, q0, cfg.h, cfg, workers);
    const double f0 = f.value(s0);
    std::vector<double> diffs;
    diffs.reserve(out.size());
    for (const auto& q : out) diffs.push_back((f.value(q.s) - f0) / cfg.h);
    const SampleStats st = sample_stats(diffs);
    return {s0, f, apply_q_generator(model, f, s0), st.mean, st.stderr_, cfg.h, cfg.path_count};
}

DriftEstimate mc_drift_estimate(const BallModel& model, const GroupPoint& s0, const IntegratorConfig& cfg,
                                const NoiseConfig& noise, int workers) {
    cfg.validate();
    const int m = model.dim();
    const int n = model.n();
    const GroupPoint s0_inv = s0.inverse();
    Eigen::MatrixXd samples(m, cfg.path_count);
    run_paths(model, s0, 1, cfg, noise, workers, [&](std::int64_t p, int k, const GroupPoint& s) {
        if (k == 1) samples.col(p) = log_map(GroupPoint(s0_inv.matrix() * s.matrix())).coords() / cfg.h;
    });

    const Eigen::VectorXd mean = samples.rowwise().mean();
    Eigen::VectorXd se(m);
    const double count = static_cast<double>(cfg.path_count);
    for (int k = 0; k < m; ++k) {
        const double ss = (samples.row(k).array() - mean[k]).square().sum();
        se[k] = cfg.path_count > 1 ? std::sqrt(ss / (count - 1.0) / count) : std::numeric_limits<double>::infinity();
    }

    const CompressedMetric metric(model, s0);
    const NhFields fields = nh_vector_fields(model, s0);
    AlgebraVector correction(n);
    if (noise.angular)
        for (const auto& v : fields.V) correction += 0.5 * nabla_nh(model, metric, v, v);
    if (noise.translational)
        for (const auto& u : fields.U) correction += 0.5 * nabla_nh(model, metric, u, u);

    return {AlgebraVector(n, mean) + correction, se, drift_vector(model, s0, noise), cfg.path_count, cfg.h};
}

// ---------------------------------------------------------------- sphere

Eigen::VectorXd sphere_project(const GroupPoint& s) { return s.matrix().row(s.n() - 1).transpose(); }

bool SphereTestReport::within(double rel_budget) const {
    if (!fit_accepted || !std::isfinite(rate_stderr)) return false;
    return std::abs(fitted_rate - predicted_rate) <= 3.0 * rate_stderr + rel_budget * std::abs(predicted_rate);
}

SphereTestReport sphere_decay_test(const BallModel& model, const GroupPoint& s0, double T,
                                   const IntegratorConfig& cfg, const NoiseConfig& noise, int workers,
                                   int grid_stride) {
    cfg.validate();
    const int m = model.dim();
    if ((model.gram() - Eigen::MatrixXd::Identity(m, m)).norm() > 1e-12) {
        throw std::invalid_argument("sphere_decay_test: the homogeneous ball (identity inertia) is required");
    }
    if (grid_stride < 1) throw std::invalid_argument("sphere_decay_test: grid_stride must be positive");
    const int steps = step_count(T, cfg.h);
    if (steps < 1) throw std::invalid_argument("sphere_decay_test: need at least one step");

    std::vector<int> grid;
    for (int k = 0; k <= steps; k += grid_stride) grid.push_back(k);
    if (grid.back() != steps) grid.push_back(steps);
    std::vector<int> slot(static_cast<std::size_t>(steps + 1), -1);
    for (std::size_t j = 0; j < grid.size(); ++j) slot[static_cast<std::size_t>(grid[j])] = static_cast<int>(j);

    SphereTestReport rep;
    rep.direction = sphere_project(s0);
    const TestFunction f = TestFunction::sphere_linear(rep.direction);
    const double f0 = f.value(s0);

    const auto paths = cfg.path_count;
    const auto g = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd vals(g, paths);
    run_paths(model, s0, steps, cfg, noise, workers, [&](std::int64_t p, int k, const GroupPoint& s) {
        const int j = slot[static_cast<std::size_t>(k)];
        if (j >= 0) vals(j, p) = f.value(s);
    });

    const Eigen::VectorXd mean = vals.rowwise().mean();
    const Eigen::MatrixXd centered = vals.colwise() - mean;
    const double count = static_cast<double>(paths);
    const Eigen::MatrixXd cov_mean = (centered * centered.transpose()) / ((count - 1.0) * count);
    for (Eigen::Index j = 0; j < g; ++j) {
        rep.times.push_back(grid[static_cast<std::size_t>(j)] * cfg.h);
        rep.means.push_back(mean[j]);
        rep.mean_stderr.push_back(std::sqrt(cov_mean(j, j)));
    }

    rep.predicted_rate = -apply_generator(model, f, s0, noise) / f0;
    rep.predicted_rate_full = -apply_generator(model, f, s0, NoiseConfig::full()) / f0;
    rep.predicted_rate_translational = -apply_generator(model, f, s0, NoiseConfig::translational_only()) / f0;

    // y_j = log(mean_j / f0) = -r t_j, j >= 1.
    bool positive = true;
    for (Eigen::Index j = 1; j < g; ++j) positive = positive && mean[j] > 0.0;
    if (!positive || g < 3) {
        rep.fitted_rate = std::numeric_limits<double>::quiet_NaN();
        rep.rate_stderr = std::numeric_limits<double>::infinity();
        return rep;
    }
    const Eigen::Index k = g - 1;
    Eigen::VectorXd t(k), y(k), w(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        t[j] = rep.times[static_cast<std::size_t>(j + 1)];
        y[j] = std::log(mean[j + 1] / f0);
        w[j] = mean[j + 1] * mean[j + 1] / cov_mean(j + 1, j + 1);
    }
    const double stt = (w.array() * t.array() * t.array()).sum();
    const Eigen::VectorXd a = -(w.array() * t.array()).matrix() / stt;
    rep.fitted_rate = a.dot(y);

    Eigen::MatrixXd cov_y(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) cov_y(i, j) = cov_mean(i + 1, j + 1) / (mean[i + 1] * mean[j + 1]);
    rep.rate_stderr = std::sqrt(a.dot(cov_y * a));

    const Eigen::VectorXd resid = y + rep.fitted_rate * t;
    const double ss_tot = (y.array() - y.mean()).square().sum();
    rep.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 0.0;
    rep.fit_accepted = rep.r_squared >= kMinRSquared;
    return rep;
}

// ---------------------------------------------------------------- drift report

DriftReport drift_theorem_report(const BallModel& model, const std::vector<GroupPoint>& samples) {
    if (samples.empty()) throw std::invalid_argument("drift_theorem_report: need at least one sample");
    DriftReport rep;
    for (const auto& s : samples) {
        const AlgebraVector d = drift_vector(model, s);
        const AlgebraVector grad = grad_logN(model, s);
        const Eigen::MatrixXd xis = xi_matrix(s);
        DriftReportRow row;
        row.residual_theorem = (d + 0.5 * grad).norm();
        row.residual_theorem_derived = (d - kDriftGradientCoeff * grad).norm();
        row.max_vel_horiz = xis.cols() ? (xis.transpose() * d.coords()).cwiseAbs().maxCoeff() : 0.0;
        row.max_mech_horiz =
            xis.cols() ? (xis.transpose() * mu0_matrix(model, s) * d.coords()).cwiseAbs().maxCoeff() : 0.0;
        row.ham_residual = ham_condition_residual(model, s);
        rep.rows.push_back(row);
    }
    auto fold = [&](auto pick) {
        double mx = 0.0, sum = 0.0;
        for (const auto& r : rep.rows) {
            mx = std::max(mx, pick(r));
            sum += pick(r);
        }
        return std::pair{mx, sum / static_cast<double>(rep.rows.size())};
    };
    std::tie(rep.max.residual_theorem, rep.mean.residual_theorem) = fold([](const auto& r) { return r.residual_theorem; });
    std::tie(rep.max.residual_theorem_derived, rep.mean.residual_theorem_derived) =
        fold([](const auto& r) { return r.residual_theorem_derived; });
    std::tie(rep.max.max_mech_horiz, rep.mean.max_mech_horiz) = fold([](const auto& r) { return r.max_mech_horiz; });
    std::tie(rep.max.max_vel_horiz, rep.mean.max_vel_horiz) = fold([](const auto& r) { return r.max_vel_horiz; });
    std::tie(rep.max.ham_residual, rep.mean.ham_residual) = fold([](const auto& r) { return r.ham_residual; });
    return rep;
}

}  // namespace chaplygin
