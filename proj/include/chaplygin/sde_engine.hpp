#ifndef CHAPLYGIN_SDE_ENGINE_HPP
#define CHAPLYGIN_SDE_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chaplygin/ball_model.hpp"
#include "chaplygin/lie_kernel.hpp"
#include "chaplygin/noise_config.hpp"

namespace chaplygin {

enum class Scheme { euler_exp, heun_exp };

Scheme parse_scheme(const std::string& name);
const char* scheme_name(Scheme s);

struct IntegratorConfig {
    double h = 1e-3;
    Scheme scheme = Scheme::heun_exp;
    int reorth_interval = 100;
    std::uint64_t master_seed = 0;
    std::int64_t path_count = 1;

    /// Throws std::invalid_argument on h <= 0, path_count < 1 or
    /// reorth_interval < 1.
    void validate() const;
};

/// Orthogonality defect that triggers an early polar projection.
constexpr double kReorthDefect = 1e-10;

struct QState {
    GroupPoint s;
    Eigen::VectorXd x;
};

/// Left-trivialized coefficients of the projected SDE
/// ds = s (V0 dt + sum V_i dB^i + sum U_a dW^a).
struct NhFields {
    AlgebraVector V0;
    std::vector<AlgebraVector> V;
    std::vector<AlgebraVector> U;
};

NhFields nh_vector_fields(const BallModel& model, const GroupPoint& s);

/// V0 dt + sum V_i dB^i + sum U_a dW^a at s with inactive channels dropped.
/// Uses a single solve with mu0(s).
AlgebraVector sde_increment(const BallModel& model, const GroupPoint& s, double dt, const Eigen::VectorXd& dB,
                            const Eigen::VectorXd& dW, const NoiseConfig& noise);

/// One step of the projected diffusion. `step_index` counts completed steps
/// and drives the periodic re-orthonormalization. Throws StepRejected when an
/// increment leaves the exp/log safety region.
GroupPoint step(const BallModel& model, const GroupPoint& s, double dt, const Eigen::VectorXd& dB,
                const Eigen::VectorXd& dW, const IntegratorConfig& cfg, const NoiseConfig& noise,
                std::int64_t step_index = 0);

/// Fills dB (length m) and dW (length n-1) with N(0, dt) increments for
/// (seed, path, step), B block first. Inactive channels are zeroed after the
/// draw, so the active channels see the same numbers under any ablation.
void draw_increments(std::uint64_t seed, std::uint64_t path, std::uint32_t step_index, double dt,
                     const NoiseConfig& noise, Eigen::VectorXd& dB, Eigen::VectorXd& dW);

/// Number of steps of size h that cover [0, T]; throws unless T/h is an
/// integer to 1e-9 relative.
int step_count(double T, double h);

/// Called with (path, step, state) for step = 0 (initial state) and after
/// every completed step. Invoked concurrently for different paths.
using PathObserver = std::function<void(std::int64_t, int, const GroupPoint&)>;

/// Runs cfg.path_count independent paths for `steps` steps on `workers`
/// threads. Randomness depends only on (master_seed, path, step), so
/// results do not depend on the worker count. A StepRejected in any path is
/// rethrown (lowest path index first) after all workers stop.
void run_paths(const BallModel& model, const GroupPoint& s0, int steps, const IntegratorConfig& cfg,
               const NoiseConfig& noise, int workers, const PathObserver& observer);

struct PathEnsemble {
    std::vector<GroupPoint> terminal;
    std::vector<double> snapshot_times;
    /// snapshots[path][j] is the state at snapshot_times[j].
    std::vector<std::vector<GroupPoint>> snapshots;
};

/// snapshot_stride = 0 keeps only terminal states.
PathEnsemble simulate_ensemble(const BallModel& model, const GroupPoint& s0, double T, const IntegratorConfig& cfg,
                               const NoiseConfig& noise, int workers = 1, int snapshot_stride = 0);

/// Base projection of the Brownian motion on Q = SO(n) x R^{n-1}:
/// s <- s exp(-1/2 sum nabla^I_{v_i} v_i dt + sum v_i dB^i), x <- x + dW.
QState q_bm_step(const BallModel& model, const QState& state, double dt, const Eigen::VectorXd& dB,
                 const Eigen::VectorXd& dW, const IntegratorConfig& cfg, std::int64_t step_index = 0);

/// Terminal states of cfg.path_count Q-level paths over [0, T].
std::vector<QState> simulate_q_ensemble(const BallModel& model, const QState& q0, double T,
                                        const IntegratorConfig& cfg, int workers = 1);

/// Splits [0, count) over up to `workers` threads; fn(begin, end) per chunk.
/// Exceptions are rethrown on the calling thread, lowest chunk first.
void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace chaplygin

#endif  // CHAPLYGIN_SDE_ENGINE_HPP
