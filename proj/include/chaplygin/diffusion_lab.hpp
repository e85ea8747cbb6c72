#ifndef CHAPLYGIN_DIFFUSION_LAB_HPP
#define CHAPLYGIN_DIFFUSION_LAB_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "chaplygin/ball_model.hpp"
#include "chaplygin/nh_geometry.hpp"
#include "chaplygin/noise_config.hpp"
#include "chaplygin/sde_engine.hpp"

namespace chaplygin {

/// Mean and standard error of an i.i.d. sample.
struct SampleStats {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t count = 0;
};

SampleStats sample_stats(const std::vector<double>& xs);

/// A f(s) = V0.f + 1/2 sum V_i.(V_i.f) + 1/2 sum U_a.(U_a.f) over the active
/// channels, with the field derivatives taken analytically.
double apply_generator(const BallModel& model, const TestFunction& f, const GroupPoint& s,
                       const NoiseConfig& noise = NoiseConfig::full());

/// drift.f + 1/2 sum Hess^nh f(V_i, V_i) + 1/2 sum Hess^nh f(U_a, U_a).
double generator_regrouped(const BallModel& model, const TestFunction& f, const GroupPoint& s,
                           const NoiseConfig& noise = NoiseConfig::full());

/// 1/2 sum_i (v_i v_i - nabla^I_{v_i} v_i) f: generator of the s-marginal of
/// the Brownian motion on Q.
double apply_q_generator(const BallModel& model, const TestFunction& f, const GroupPoint& s);

struct GeneratorReport {
    GroupPoint point;
    TestFunction f{Eigen::MatrixXd()};
    double analytic = 0.0;
    double mc_estimate = 0.0;
    double stderr_ = 0.0;
    double h = 0.0;
    std::int64_t paths = 0;

    /// |mc - analytic| <= 3 stderr + rel_budget |analytic| with finite stderr.
    bool within(double rel_budget) const;
};

/// (E[f(Gamma_h)] - f(s0)) / h over cfg.path_count one-step paths.
GeneratorReport mc_generator_estimate(const BallModel& model, const TestFunction& f, const GroupPoint& s0,
                                      const IntegratorConfig& cfg, const NoiseConfig& noise, int workers = 1);

/// Same for the s-marginal of the Brownian motion on Q, against
/// apply_q_generator.
GeneratorReport mc_q_generator_estimate(const BallModel& model, const TestFunction& f, const GroupPoint& s0,
                                        const IntegratorConfig& cfg, int workers = 1);

/// E[log(s0^{-1} Gamma_h)] / h plus the connection correction
/// 1/2 sum nabla^nh(V_i, V_i) + 1/2 sum nabla^nh(U_a, U_a) at s0: a Monte-Carlo
/// estimate of the nabla^nh drift.
struct DriftEstimate {
    AlgebraVector estimate;
    Eigen::VectorXd stderr_;  // per coordinate
    AlgebraVector analytic;   // drift_vector(s0) restricted to the channels
    std::int64_t paths = 0;
    double h = 0.0;

    /// sqrt(sum stderr_k^2), the scale of ||estimate - mean||.
    double norm_stderr() const { return stderr_.norm(); }
};

DriftEstimate mc_drift_estimate(const BallModel& model, const GroupPoint& s0, const IntegratorConfig& cfg,
                                const NoiseConfig& noise, int workers = 1);

/// kappa(s) = s^T e_n.
Eigen::VectorXd sphere_project(const GroupPoint& s);

struct SphereTestReport {
    Eigen::VectorXd direction;
    std::vector<double> times;
    std::vector<double> means;
    std::vector<double> mean_stderr;
    double fitted_rate = 0.0;
    double rate_stderr = 0.0;
    double predicted_rate = 0.0;
    /// Predicted rate with translational noise only (reported alongside).
    double predicted_rate_translational = 0.0;
    double predicted_rate_full = 0.0;
    double r_squared = 0.0;
    bool fit_accepted = false;

    bool within(double rel_budget) const;
};

/// Minimum R^2 of the log-linear fit.
constexpr double kMinRSquared = 0.9;

/// Decay of E<kappa(Gamma_t), c> for the homogeneous ball (identity
/// inertia required) with c = kappa(s0). The rate is fitted by weighted
/// least squares on log-means through the known intercept log f(s0) = 0,
/// with delta-method covariances; t = 0 is excluded from the fit.
SphereTestReport sphere_decay_test(const BallModel& model, const GroupPoint& s0, double T,
                                   const IntegratorConfig& cfg, const NoiseConfig& noise, int workers = 1,
                                   int grid_stride = 10);

struct DriftReportRow {
    double residual_theorem = 0.0;          // ||drift + 1/2 grad log N||
    double residual_theorem_derived = 0.0;  // ||drift - kDriftGradientCoeff grad log N||
    double max_mech_horiz = 0.0;            // max_alpha |mu0(drift, xi_alpha)|
    double max_vel_horiz = 0.0;             // max_alpha |<xi_alpha, drift>|
    double ham_residual = 0.0;
};

struct DriftReport {
    std::vector<DriftReportRow> rows;
    DriftReportRow max;
    DriftReportRow mean;
};

DriftReport drift_theorem_report(const BallModel& model, const std::vector<GroupPoint>& samples);

}  // namespace chaplygin

#endif  // CHAPLYGIN_DIFFUSION_LAB_HPP
