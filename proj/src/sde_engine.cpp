#include "chaplygin/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "chaplygin/rng.hpp"

namespace chaplygin {

Scheme parse_scheme(const std::string& name) {
    if (name == "heun_exp") return Scheme::heun_exp;
    if (name == "euler_exp") return Scheme::euler_exp;
    throw std::invalid_argument("unknown scheme '" + name + "' (expected heun_exp or euler_exp)");
}

const char* scheme_name(Scheme s) { return s == Scheme::heun_exp ? "heun_exp" : "euler_exp"; }

void IntegratorConfig::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("integrator: h must be positive");
    if (path_count < 1) throw std::invalid_argument("integrator: path_count must be >= 1");
    if (reorth_interval < 1) throw std::invalid_argument("integrator: reorth_interval must be >= 1");
}

namespace {

void check_sizes(const BallModel& model, const Eigen::VectorXd& dB, const Eigen::VectorXd& dW) {
    if (dB.size() != model.dim() || dW.size() != model.n() - 1) {
        throw std::invalid_argument("increment sizes do not match the model (expected " +
                                    std::to_string(model.dim()) + " and " + std::to_string(model.n() - 1) +
                                    ")");
    }
}

// mu0 (sum V_i dB^i + sum U_a dW^a) = (I v) dB - Z dW.
Eigen::VectorXd noise_rhs(const BallModel& model, const CompressedMetric& metric, const Eigen::VectorXd& dB,
                          const Eigen::VectorXd& dW, const NoiseConfig& noise) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(model.dim());
    if (noise.angular) rhs += model.inertia_frame() * dB;
    if (noise.translational) rhs -= metric.zetas() * dW;
    return rhs;
}

// mu0 V0 dt = -1/2 I S dt.
Eigen::VectorXd drift_rhs(const BallModel& model, double dt, const NoiseConfig& noise) {
    if (!noise.h0_active()) return Eigen::VectorXd::Zero(model.dim());
    return -(0.5 * dt) * model.inertia_sum_nabla_I();
}

GroupPoint advance(const GroupPoint& s, const AlgebraVector& a, int reorth_interval, std::int64_t step_index) {
    check_increment(a);
    const Eigen::MatrixXd next = s.matrix() * expm(a.matrix());
    if ((step_index + 1) % reorth_interval == 0 || orthogonality_defect(next) > kReorthDefect) {
        return GroupPoint(nearest_rotation(next));
    }
    return GroupPoint(next);
}

}  // namespace

NhFields nh_vector_fields(const BallModel& model, const GroupPoint& s) {
    const CompressedMetric metric(model, s);
    const int n = model.n();
    NhFields f{AlgebraVector(n, metric.solve(Eigen::VectorXd(-0.5 * model.inertia_sum_nabla_I()))), {}, {}};
    const Eigen::MatrixXd v = metric.solve(model.inertia_frame());
    const Eigen::MatrixXd u = -metric.solve(metric.zetas());
    for (int i = 0; i < v.cols(); ++i) f.V.emplace_back(n, v.col(i));
    for (int a = 0; a < u.cols(); ++a) f.U.emplace_back(n, u.col(a));
    return f;
}

AlgebraVector sde_increment(const BallModel& model, const GroupPoint& s, double dt, const Eigen::VectorXd& dB,
                            const Eigen::VectorXd& dW, const NoiseConfig& noise) {
    check_sizes(model, dB, dW);
    const CompressedMetric metric(model, s);
    return AlgebraVector(model.n(),
                         metric.solve(Eigen::VectorXd(drift_rhs(model, dt, noise) + noise_rhs(model, metric, dB, dW, noise))));
}

GroupPoint step(const BallModel& model, const GroupPoint& s, double dt, const Eigen::VectorXd& dB,
                const Eigen::VectorXd& dW, const IntegratorConfig& cfg, const NoiseConfig& noise,
                std::int64_t step_index) {
    check_sizes(model, dB, dW);
    const int n = model.n();
    const CompressedMetric metric(model, s);
    const Eigen::VectorXd drift = metric.solve(drift_rhs(model, dt, noise));
    const Eigen::VectorXd noise0 = metric.solve(noise_rhs(model, metric, dB, dW, noise));
    const AlgebraVector a(n, drift + noise0);
    if (cfg.scheme == Scheme::euler_exp) return advance(s, a, cfg.reorth_interval, step_index);

    check_increment(a);
    const GroupPoint pred(s.matrix() * expm(a.matrix()));
    const CompressedMetric metric_pred(model, pred);
    const Eigen::VectorXd noise1 = metric_pred.solve(noise_rhs(model, metric_pred, dB, dW, noise));
    const AlgebraVector b(n, drift + 0.5 * (noise0 + noise1));
    return advance(s, b, cfg.reorth_interval, step_index);
}

void draw_increments(std::uint64_t seed, std::uint64_t path, std::uint32_t step_index, double dt,
                     const NoiseConfig& noise, Eigen::VectorXd& dB, Eigen::VectorXd& dW) {
    const auto m = dB.size();
    const auto r = dW.size();
    Eigen::VectorXd z(m + r);
    gaussian_block(seed, path, step_index, std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
    const double sd = std::sqrt(dt);
    dB = noise.angular ? Eigen::VectorXd(sd * z.head(m)) : Eigen::VectorXd::Zero(m);
    dW = noise.translational ? Eigen::VectorXd(sd * z.tail(r)) : Eigen::VectorXd::Zero(r);
}

int step_count(double T, double h) {
    if (!(T >= 0.0) || !(h > 0.0)) throw std::invalid_argument("step_count: need T >= 0 and h > 0");
    const double ratio = T / h;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("T = " + std::to_string(T) + " is not a multiple of h = " + std::to_string(h));
    }
    if (k > 2147483647.0) throw std::invalid_argument("step_count: too many steps");
    return static_cast<int>(k);
}

void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (count <= 0) return;
    const int w = static_cast<int>(std::clamp<std::int64_t>(workers, 1, count));
    if (w == 1) {
        fn(0, count);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(w));
    for (int t = 0; t < w; ++t) {
        const std::int64_t begin = count * t / w;
        const std::int64_t end = count * (t + 1) / w;
        threads.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void run_paths(const BallModel& model, const GroupPoint& s0, int steps, const IntegratorConfig& cfg,
               const NoiseConfig& noise, int workers, const PathObserver& observer) {
    cfg.validate();
    if (s0.n() != model.n()) throw std::invalid_argument("run_paths: initial point has the wrong dimension");
    parallel_for(cfg.path_count, workers, [&](std::int64_t begin, std::int64_t end) {
        Eigen::VectorXd dB(model.dim());
        Eigen::VectorXd dW(model.n() - 1);
        for (std::int64_t p = begin; p < end; ++p) {
            GroupPoint s = s0;
            if (observer) observer(p, 0, s);
            for (int k = 0; k < steps; ++k) {
                draw_increments(cfg.master_seed, static_cast<std::uint64_t>(p), static_cast<std::uint32_t>(k),
                                cfg.h, noise, dB, dW);
                try {
                    s = step(model, s, cfg.h, dB, dW, cfg, noise, k);
                } catch (const StepRejected& e) {
                    throw StepRejected("path " + std::to_string(p) + ", step " + std::to_string(k) + ": " +
                                       e.what());
                }
                if (observer) observer(p, k + 1, s);
            }
        }
    });
}

PathEnsemble simulate_ensemble(const BallModel& model, const GroupPoint& s0, double T, const IntegratorConfig& cfg,
                               const NoiseConfig& noise, int workers, int snapshot_stride) {
    cfg.validate();
    const int steps = step_count(T, cfg.h);
    if (snapshot_stride < 0) throw std::invalid_argument("simulate_ensemble: negative snapshot stride");
    const auto paths = static_cast<std::size_t>(cfg.path_count);

    PathEnsemble out;
    out.terminal.resize(paths);
    std::vector<int> snap_steps;
    if (snapshot_stride > 0) {
        for (int k = 0; k <= steps; k += snapshot_stride) snap_steps.push_back(k);
        if (snap_steps.back() != steps) snap_steps.push_back(steps);
        for (int k : snap_steps) out.snapshot_times.push_back(k * cfg.h);
        out.snapshots.assign(paths, std::vector<GroupPoint>(snap_steps.size()));
    }
    run_paths(model, s0, steps, cfg, noise, workers, [&](std::int64_t p, int k, const GroupPoint& s) {
        const auto pi = static_cast<std::size_t>(p);
        if (k == steps) out.terminal[pi] = s;
        if (snapshot_stride > 0) {
            const auto it = std::lower_bound(snap_steps.begin(), snap_steps.end(), k);
            if (it != snap_steps.end() && *it == k) out.snapshots[pi][static_cast<std::size_t>(it - snap_steps.begin())] = s;
        }
    });
    return out;
}

QState q_bm_step(const BallModel& model, const QState& state, double dt, const Eigen::VectorXd& dB,
                 const Eigen::VectorXd& dW, const IntegratorConfig& cfg, std::int64_t step_index) {
    check_sizes(model, dB, dW);
    if (state.x.size() != model.n() - 1) throw std::invalid_argument("q_bm_step: x has the wrong length");
    // The coefficients are left-invariant, so the Heun corrector reproduces
    // the predictor exactly and both schemes coincide.
    const AlgebraVector a(model.n(), -(0.5 * dt) * model.sum_nabla_I().coords() + model.frame() * dB);
    return {advance(state.s, a, cfg.reorth_interval, step_index), state.x + dW};
}

std::vector<QState> simulate_q_ensemble(const BallModel& model, const QState& q0, double T,
                                        const IntegratorConfig& cfg, int workers) {
    cfg.validate();
    const int steps = step_count(T, cfg.h);
    std::vector<QState> out(static_cast<std::size_t>(cfg.path_count));
    const NoiseConfig all = NoiseConfig::full();
    parallel_for(cfg.path_count, workers, [&](std::int64_t begin, std::int64_t end) {
        Eigen::VectorXd dB(model.dim());
        Eigen::VectorXd dW(model.n() - 1);
        for (std::int64_t p = begin; p < end; ++p) {
            QState q = q0;
            for (int k = 0; k < steps; ++k) {
                draw_increments(cfg.master_seed, static_cast<std::uint64_t>(p), static_cast<std::uint32_t>(k),
                                cfg.h, all, dB, dW);
                q = q_bm_step(model, q, cfg.h, dB, dW, cfg, k);
            }
            out[static_cast<std::size_t>(p)] = std::move(q);
        }
    });
    return out;
}

}  // namespace chaplygin
