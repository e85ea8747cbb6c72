#include "chaplygin/cli_runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "chaplygin/diffusion_lab.hpp"
#include "chaplygin/nh_geometry.hpp"
#include "chaplygin/rng.hpp"

namespace chaplygin {

using nlohmann::json;

// ---------------------------------------------------------------- utilities

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// ---------------------------------------------------------------- json access

const json& member(const json& obj, const std::string& where, const char* key) {
    static const json kNull;
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    const auto it = obj.find(key);
    return it == obj.end() ? kNull : *it;
}

std::string field_name(const std::string& where, const char* key) {
    return where.empty() ? std::string(key) : where + "." + key;
}

double get_number(const json& obj, const std::string& where, const char* key, std::optional<double> def) {
    const json& v = member(obj, where, key);
    if (v.is_null()) {
        if (def) return *def;
        throw ConfigError("config: missing required field '" + field_name(where, key) + "'");
    }
    if (!v.is_number()) throw ConfigError("config: field '" + field_name(where, key) + "' must be a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& where, const char* key, std::optional<std::int64_t> def) {
    const json& v = member(obj, where, key);
    if (v.is_null()) {
        if (def) return *def;
        throw ConfigError("config: missing required field '" + field_name(where, key) + "'");
    }
    if (!v.is_number_integer()) throw ConfigError("config: field '" + field_name(where, key) + "' must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& where, const char* key, std::uint64_t def) {
    const json& v = member(obj, where, key);
    if (v.is_null()) return def;
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError("config: field '" + field_name(where, key) + "' must be a non-negative integer");
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool def) {
    const json& v = member(obj, where, key);
    if (v.is_null()) return def;
    if (!v.is_boolean()) throw ConfigError("config: field '" + field_name(where, key) + "' must be true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key, std::optional<std::string> def) {
    const json& v = member(obj, where, key);
    if (v.is_null()) {
        if (def) return *def;
        throw ConfigError("config: missing required field '" + field_name(where, key) + "'");
    }
    if (!v.is_string()) throw ConfigError("config: field '" + field_name(where, key) + "' must be a string");
    return v.get<std::string>();
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) return;
    for (const auto& [k, _] : obj.items())
        if (!allowed.count(k)) throw ConfigError("config: unknown field '" + field_name(where, k.c_str()) + "'");
}

std::int64_t positive(std::int64_t v, const std::string& name) {
    if (v < 1) throw ConfigError("config: field '" + name + "' must be >= 1");
    return v;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override) {
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown(doc, "", {"n", "inertia", "noise", "integrator", "experiment", "output_dir"});
    ExperimentConfig cfg;
    cfg.effective = doc;

    cfg.n = static_cast<int>(get_integer(doc, "", "n", std::nullopt));
    if (cfg.n < 3) throw ConfigError("config: field 'n' must be >= 3");
    if (cfg.n > 12) throw ConfigError("config: field 'n' must be <= 12");

    const json& in = member(doc, "", "inertia");
    if (in.is_null() || (in.is_string() && in.get<std::string>() == "identity")) {
        cfg.inertia.kind = "identity";
    } else if (in.is_object()) {
        reject_unknown(in, "inertia", {"kind", "masses", "path", "seed"});
        cfg.inertia.kind = get_string(in, "inertia", "kind", std::nullopt);
        if (cfg.inertia.kind == "masses") {
            const json& ms = member(in, "inertia", "masses");
            if (!ms.is_array()) throw ConfigError("config: field 'inertia.masses' must be an array of numbers");
            for (const auto& v : ms) {
                if (!v.is_number()) throw ConfigError("config: field 'inertia.masses' must be an array of numbers");
                cfg.inertia.masses.push_back(v.get<double>());
            }
            if (static_cast<int>(cfg.inertia.masses.size()) != cfg.n) {
                throw ConfigError("config: field 'inertia.masses' must have n = " + std::to_string(cfg.n) + " entries");
            }
            for (double m : cfg.inertia.masses)
                if (!(m > 0.0)) throw ConfigError("config: field 'inertia.masses' must be positive");
        } else if (cfg.inertia.kind == "matrix") {
            std::filesystem::path p = get_string(in, "inertia", "path", std::nullopt);
            if (p.is_relative()) p = base_dir / p;
            if (!std::filesystem::exists(p)) {
                throw ConfigError("config: field 'inertia.path': file '" + p.string() + "' does not exist");
            }
            cfg.inertia.matrix_path = p;
        } else if (cfg.inertia.kind == "random") {
            cfg.inertia.seed = get_seed(in, "inertia", "seed", 0);
        } else if (cfg.inertia.kind != "identity") {
            throw ConfigError("config: field 'inertia.kind' must be identity, masses, matrix or random");
        }
    } else {
        throw ConfigError("config: field 'inertia' must be \"identity\" or an object");
    }

    const json& nz = member(doc, "", "noise");
    if (!nz.is_null()) {
        reject_unknown(nz, "noise", {"angular", "translational", "include_h0_drift"});
        cfg.noise.angular = get_bool(nz, "noise", "angular", true);
        cfg.noise.translational = get_bool(nz, "noise", "translational", true);
        cfg.noise.include_h0_drift = get_bool(nz, "noise", "include_h0_drift", true);
    }

    const json& ig = member(doc, "", "integrator");
    if (!ig.is_null()) {
        reject_unknown(ig, "integrator", {"h", "scheme", "reorth_interval", "master_seed", "path_count"});
        cfg.integrator.h = get_number(ig, "integrator", "h", 1e-3);
        try {
            cfg.integrator.scheme = parse_scheme(get_string(ig, "integrator", "scheme", "heun_exp"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: field 'integrator.scheme': ") + e.what());
        }
        cfg.integrator.reorth_interval = static_cast<int>(get_integer(ig, "integrator", "reorth_interval", 100));
        cfg.integrator.master_seed = get_seed(ig, "integrator", "master_seed", 0);
        cfg.integrator.path_count = get_integer(ig, "integrator", "path_count", 1);
    }
    if (seed_override) {
        cfg.integrator.master_seed = *seed_override;
        cfg.effective["integrator"]["master_seed"] = *seed_override;
    }
    try {
        cfg.integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    const json& ex = member(doc, "", "experiment");
    if (!ex.is_null()) {
        if (!ex.is_object()) throw ConfigError("config: field 'experiment' must be an object");
        cfg.experiment = ex;
    }
    std::filesystem::path out = get_string(doc, "", "output_dir", ".");
    cfg.output_dir = out.is_relative() ? base_dir / out : out;

    cfg.hash = hex64(fnv1a64(cfg.effective.dump()));
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open '" + file.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + file.string() + ": " + e.what());
    }
    return parse_config(doc, file.parent_path(), seed_override);
}

Eigen::MatrixXd read_matrix_file(const std::filesystem::path& file, int m) {
    std::ifstream in(file);
    if (!in) throw ConfigError("inertia matrix: cannot open '" + file.string() + "'");
    std::vector<double> vals;
    std::string tok;
    while (in >> tok) {
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            throw ConfigError("inertia matrix: '" + file.string() + "': bad number '" + tok + "'");
        }
        vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != m * m) {
        throw ConfigError("inertia matrix: '" + file.string() + "' has " + std::to_string(vals.size()) +
                          " entries, expected " + std::to_string(m * m));
    }
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(vals.data(), m, m);
}

InertiaOperator build_inertia(const ExperimentConfig& cfg) {
    try {
        if (cfg.inertia.kind == "masses") return physical_inertia(cfg.n, cfg.inertia.masses);
        if (cfg.inertia.kind == "matrix")
            return InertiaOperator(cfg.n, read_matrix_file(cfg.inertia.matrix_path, algebra_dim(cfg.n)));
        if (cfg.inertia.kind == "random") {
            StreamRng rng(cfg.inertia.seed, 0x1e27);
            return random_inertia(cfg.n, rng);
        }
        return InertiaOperator::identity(cfg.n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: field 'inertia': ") + e.what());
    }
}

// ---------------------------------------------------------------- output

namespace {

using Tolerances = std::vector<std::pair<std::string, double>>;

std::string tolerance_string(const Tolerances& tol) {
    std::string s;
    for (const auto& [k, v] : tol) s += (s.empty() ? "" : ";") + k + "=" + format_double(v);
    return s.empty() ? "none" : s;
}

class CsvWriter {
public:
    CsvWriter(const ExperimentConfig& cfg, const std::string& name, const std::string& schema,
              const Tolerances& tol, const std::vector<std::string>& columns)
        : path_(cfg.output_dir / (name + ".csv")), out_(path_, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write '" + path_.string() + "'");
        out_ << "# chaplygin " << kArtifactVersion << " schema=" << schema << " config_hash=" << cfg.hash
             << " seed=" << cfg.integrator.master_seed << " tolerances=" << tolerance_string(tol) << '\n';
        row(columns);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Run {
public:
    Run(const ExperimentConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
        std::filesystem::create_directories(cfg.output_dir);
        started_ = utc_now();
        t0_ = std::chrono::steady_clock::now();
    }

    /// Records a gated metric; fails the run when !(value <= tol).
    void gate(const std::string& name, double value, double tol) {
        tolerances_.emplace_back(name, tol);
        metrics_[name] = value;
        if (!(value <= tol)) failures_.push_back(name + " = " + format_double(value) + " exceeds " + format_double(tol));
    }
    void check(const std::string& name, bool ok, const std::string& detail) {
        if (!ok) failures_.push_back(name + ": " + detail);
    }
    void info(const std::string& name, const json& value) { metrics_[name] = value; }
    void add_tolerance(const std::string& name, double tol) { tolerances_.emplace_back(name, tol); }
    const Tolerances& tolerances() const { return tolerances_; }

    int finish(const std::vector<std::filesystem::path>& files) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        json tol = json::object();
        for (const auto& [k, v] : tolerances_) tol[k] = v;
        json outputs = json::array();
        for (const auto& f : files) outputs.push_back(f.filename().string());
        const bool pass = failures_.empty();
        const json summary = {{"artifact_version", kArtifactVersion},
                              {"command", command_},
                              {"config_hash", cfg_.hash},
                              {"master_seed", cfg_.integrator.master_seed},
                              {"started_utc", started_},
                              {"wall_clock_seconds", wall},
                              {"tolerances", tol},
                              {"metrics", metrics_},
                              {"outputs", outputs},
                              {"failures", failures_},
                              {"pass", pass}};
        std::ofstream out(cfg_.output_dir / (file_stem() + ".json"), std::ios::binary);
        out << summary.dump(2) << '\n';
        for (const auto& f : failures_) std::cerr << command_ << ": FAIL " << f << '\n';
        std::cout << command_ << ": " << (pass ? "pass" : "FAIL") << " (" << format_double(wall) << " s)\n";
        return pass ? kExitPass : kExitFail;
    }

    std::string file_stem() const {
        std::string s = command_;
        for (auto& c : s)
            if (c == '-') c = '_';
        return s;
    }

private:
    const ExperimentConfig& cfg_;
    std::string command_;
    std::string started_;
    std::chrono::steady_clock::time_point t0_;
    Tolerances tolerances_;
    json metrics_ = json::object();
    std::vector<std::string> failures_;
};

std::string num(double x) { return format_double(x); }

GroupPoint initial_point(const ExperimentConfig& cfg, const char* key) {
    const std::string where = "experiment";
    const json& v = member(cfg.experiment, where, key);
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "random")) {
        StreamRng rng(cfg.integrator.master_seed, 0x5e0);
        return random_group_point(cfg.n, rng);
    }
    if (v.is_string() && v.get<std::string>() == "identity") return GroupPoint::identity(cfg.n);
    throw ConfigError("config: field 'experiment." + std::string(key) + "' must be \"identity\" or \"random\"");
}

struct Max {
    double value = 0.0;
    void add(double v) {
        if (std::isnan(v) || std::isnan(value))
            value = std::numeric_limits<double>::quiet_NaN();
        else
            value = std::max(value, v);
    }
};

}  // namespace

// ---------------------------------------------------------------- verify

int cmd_verify(const ExperimentConfig& cfg, const RunOptions&) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"dims", "random_inertias", "inertia_seed", "samples"});
    std::vector<int> dims;
    const json& d = member(cfg.experiment, w, "dims");
    if (d.is_null()) {
        dims.push_back(cfg.n);
    } else {
        if (!d.is_array() || d.empty()) throw ConfigError("config: field 'experiment.dims' must be a non-empty array");
        for (const auto& v : d) {
            if (!v.is_number_integer() || v.get<int>() < 3 || v.get<int>() > 12) {
                throw ConfigError("config: field 'experiment.dims' entries must be integers in [3, 12]");
            }
            dims.push_back(v.get<int>());
        }
    }
    const auto n_inertias = get_integer(cfg.experiment, w, "random_inertias", 0);
    const auto inertia_seed = get_seed(cfg.experiment, w, "inertia_seed", cfg.integrator.master_seed);
    const auto samples = positive(get_integer(cfg.experiment, w, "samples", 50), "experiment.samples");

    Run run(cfg, "verify");
    Max theorem, theorem_stated, e0, e0_stated, e1, e1_stated, e2, fd, mech, vel, torsion, metric, angular;
    std::int64_t vel_checked = 0;
    StreamRng rng(inertia_seed, 0x7e5);
    for (int n : dims) {
        std::vector<InertiaOperator> inertias;
        if (n_inertias > 0) {
            for (std::int64_t k = 0; k < n_inertias; ++k) inertias.push_back(random_inertia(n, rng));
        } else if (n == cfg.n) {
            inertias.push_back(build_inertia(cfg));
        } else {
            inertias.push_back(InertiaOperator::identity(n));
        }
        for (const auto& inertia : inertias) {
            const BallModel model(inertia);
            for (std::int64_t k = 0; k < samples; ++k) {
                const GroupPoint s = random_group_point(n, rng);
                const AlgebraVector u = random_algebra_vector(n, rng);
                const AlgebraVector v = random_algebra_vector(n, rng);
                const AlgebraVector x = random_algebra_vector(n, rng);

                theorem.add(theorem_residual(model, s, kDriftGradientCoeff));
                theorem_stated.add(theorem_residual(model, s));
                e0.add(verify_identity_e0(model, s, 2.0 * kDriftGradientCoeff));
                e0_stated.add(verify_identity_e0(model, s));
                e1.add(verify_identity_e1(model, s, 2.0 * kDriftGradientCoeff));
                e1_stated.add(verify_identity_e1(model, s));
                e2.add(verify_identity_e2(model, s));

                const double step = 1e-5;
                const double fd_val =
                    (log_density(model, s * exp_map(step * u)) - log_density(model, s * exp_map(-step * u))) /
                    (2.0 * step);
                fd.add(std::abs(fd_val - dlogN_apply(model, s, u)));

                const AlgebraVector drift = drift_vector(model, s);
                const Eigen::MatrixXd xis = xi_matrix(s);
                const Eigen::MatrixXd mu0 = mu0_matrix(model, s);
                if (xis.cols() > 0) {
                    mech.add((xis.transpose() * mu0 * drift.coords()).cwiseAbs().maxCoeff());
                    if (ham_condition_residual(model, s) < kHamSatisfiedTol) {
                        vel.add((xis.transpose() * drift.coords()).cwiseAbs().maxCoeff());
                        ++vel_checked;
                    }
                }

                const AlgebraVector tor = nabla_nh(model, s, u, v) - nabla_nh(model, s, v, u) - bracket(u, v);
                torsion.add((tor - torsion_nh(model, s, u, v)).norm());

                const double lhs = u.coords().dot(left_derivative_mu0(s, x) * v.coords());
                const double rhs = nabla_nh(model, s, x, u).coords().dot(mu0 * v.coords()) +
                                   u.coords().dot(mu0 * nabla_nh(model, s, x, v).coords());
                metric.add(std::abs(lhs - rhs));

                angular.add((drift - drift_vector(model, s, NoiseConfig::angular_only())).norm());
            }
        }
    }

    run.gate("theorem_residual", theorem.value, 1e-8);
    run.gate("identity_e0", e0.value, 1e-8);
    run.gate("identity_e1", e1.value, 1e-8);
    run.gate("identity_e2", e2.value, 1e-10);
    run.gate("dlogN_fd", fd.value, 1e-6);
    run.gate("mech_horizontality", mech.value, 1e-9);
    run.gate("vel_horizontality", vel.value, 1e-8);
    run.gate("torsion", torsion.value, 1e-12);
    run.gate("metricity", metric.value, 1e-10);
    run.gate("angular_only_drift", angular.value, 1e-12);
    run.info("drift_gradient_coeff", kDriftGradientCoeff);
    run.info("theorem_residual_coeff_minus_half", theorem_stated.value);
    run.info("identity_e0_coeff_minus_one", e0_stated.value);
    run.info("identity_e1_coeff_minus_one", e1_stated.value);
    run.info("vel_horizontality_points", vel_checked);
    return run.finish({});
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opts) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"T", "snapshot_stride", "s0"});
    const double T = get_number(cfg.experiment, w, "T", 1.0);
    const auto stride = get_integer(cfg.experiment, w, "snapshot_stride", 0);
    if (stride < 0) throw ConfigError("config: field 'experiment.snapshot_stride' must be >= 0");
    try {
        step_count(T, cfg.integrator.h);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: field 'experiment.T': ") + e.what());
    }
    const GroupPoint s0 = initial_point(cfg, "s0");
    const BallModel model(build_inertia(cfg));
    Run run(cfg, "simulate");
    const PathEnsemble ens =
        simulate_ensemble(model, s0, T, cfg.integrator, cfg.noise, opts.workers, static_cast<int>(stride));

    run.add_tolerance("orth_defect", GroupPoint::kMaxDefect);
    const int n = cfg.n;
    std::vector<std::string> cols{"path_id", "t"};
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) cols.push_back("s_" + std::to_string(i) + std::to_string(j));
    for (int i = 1; i <= n; ++i) cols.push_back("kappa_" + std::to_string(i));
    CsvWriter csv(cfg, "simulate", "simulate/1", run.tolerances(), cols);

    Max defect;
    bool finite = true;
    auto emit = [&](std::size_t p, double t, const GroupPoint& s) {
        std::vector<std::string> cells{std::to_string(p), num(t)};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cells.push_back(num(s(i, j)));
        const Eigen::VectorXd kappa = sphere_project(s);
        for (int i = 0; i < n; ++i) cells.push_back(num(kappa[i]));
        csv.row(cells);
        defect.add(s.orth_defect());
        finite = finite && s.matrix().allFinite();
    };
    for (std::size_t p = 0; p < ens.terminal.size(); ++p) {
        if (stride > 0) {
            for (std::size_t j = 0; j < ens.snapshot_times.size(); ++j) emit(p, ens.snapshot_times[j], ens.snapshots[p][j]);
        } else {
            emit(p, T, ens.terminal[p]);
        }
    }
    run.gate("orth_defect", defect.value, GroupPoint::kMaxDefect);
    run.check("finite", finite, "non-finite coordinates");
    run.info("paths", cfg.integrator.path_count);
    run.info("T", T);
    return run.finish({csv.path()});
}

// ---------------------------------------------------------------- generator test

int cmd_generator_test(const ExperimentConfig& cfg, const RunOptions& opts) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"points", "functions", "rel_budget", "process"});
    const auto points = positive(get_integer(cfg.experiment, w, "points", 3), "experiment.points");
    const auto functions = positive(get_integer(cfg.experiment, w, "functions", 5), "experiment.functions");
    const double budget = get_number(cfg.experiment, w, "rel_budget", 0.1);
    const std::string process = get_string(cfg.experiment, w, "process", "projected");
    if (process != "projected" && process != "q") {
        throw ConfigError("config: field 'experiment.process' must be \"projected\" or \"q\"");
    }
    if (cfg.integrator.path_count < 2) throw ConfigError("config: generator-test needs integrator.path_count >= 2");
    const BallModel model(build_inertia(cfg));

    Run run(cfg, "generator-test");
    run.add_tolerance("rel_budget", budget);
    run.add_tolerance("stderr_multiple", 3.0);
    if (process == "projected") run.add_tolerance("regrouping", 1e-9);
    CsvWriter csv(cfg, "generator_test", "generator_test/1", run.tolerances(),
                  {"f_id", "analytic", "mc", "stderr", "h", "paths"});

    StreamRng rng(cfg.integrator.master_seed, 0x9e7);
    Max regroup;
    int failed = 0;
    for (std::int64_t p = 0; p < points; ++p) {
        const GroupPoint s = random_group_point(cfg.n, rng);
        for (std::int64_t j = 0; j < functions; ++j) {
            Eigen::MatrixXd c(cfg.n, cfg.n);
            for (int k = 0; k < c.size(); ++k) c(k % cfg.n, k / cfg.n) = rng.normal();
            const TestFunction f(c);
            IntegratorConfig ic = cfg.integrator;
            const std::int64_t id = p * functions + j;
            ic.master_seed = mix64(cfg.integrator.master_seed + static_cast<std::uint64_t>(id));
            GeneratorReport rep;
            if (process == "projected") {
                rep = mc_generator_estimate(model, f, s, ic, cfg.noise, opts.workers);
                regroup.add(std::abs(rep.analytic - generator_regrouped(model, f, s, cfg.noise)));
            } else {
                rep = mc_q_generator_estimate(model, f, s, ic, opts.workers);
            }
            csv.row({std::to_string(id), num(rep.analytic), num(rep.mc_estimate), num(rep.stderr_), num(rep.h),
                     std::to_string(rep.paths)});
            if (!rep.within(budget)) ++failed;
            run.check("f_" + std::to_string(id), rep.within(budget),
                      "|mc - analytic| = " + num(std::abs(rep.mc_estimate - rep.analytic)) + " > 3*" +
                          num(rep.stderr_) + " + " + num(budget) + "*|" + num(rep.analytic) + "|");
        }
    }
    if (process == "projected") run.gate("regrouping", regroup.value, 1e-9);
    run.info("failed_functions", failed);
    run.info("process", process);
    return run.finish({csv.path()});
}

// ---------------------------------------------------------------- sphere test

int cmd_sphere_test(const ExperimentConfig& cfg, const RunOptions& opts) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"T", "grid_stride", "rel_budget", "s0"});
    const double T = get_number(cfg.experiment, w, "T", 2.0);
    const auto stride = positive(get_integer(cfg.experiment, w, "grid_stride", 10), "experiment.grid_stride");
    const double budget = get_number(cfg.experiment, w, "rel_budget", 0.1);
    if (cfg.inertia.kind != "identity" &&
        !(cfg.inertia.kind == "masses" &&
          std::all_of(cfg.inertia.masses.begin(), cfg.inertia.masses.end(), [](double m) { return m == 0.5; }))) {
        throw ConfigError("config: sphere-test requires the homogeneous ball (inertia \"identity\")");
    }
    if (cfg.integrator.path_count < 2) throw ConfigError("config: sphere-test needs integrator.path_count >= 2");
    try {
        step_count(T, cfg.integrator.h);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: field 'experiment.T': ") + e.what());
    }
    const GroupPoint s0 = initial_point(cfg, "s0");
    const BallModel model(build_inertia(cfg));
    Run run(cfg, "sphere-test");
    const SphereTestReport rep =
        sphere_decay_test(model, s0, T, cfg.integrator, cfg.noise, opts.workers, static_cast<int>(stride));

    run.add_tolerance("rel_budget", budget);
    run.add_tolerance("stderr_multiple", 3.0);
    run.add_tolerance("min_r_squared", kMinRSquared);
    CsvWriter csv(cfg, "sphere_test", "sphere_test/1", run.tolerances(), {"t", "mean", "stderr", "predicted_mean"});
    for (std::size_t j = 0; j < rep.times.size(); ++j) {
        csv.row({num(rep.times[j]), num(rep.means[j]), num(rep.mean_stderr[j]),
                 num(std::exp(-rep.predicted_rate * rep.times[j]))});
    }
    run.info("fitted_rate", rep.fitted_rate);
    run.info("rate_stderr", rep.rate_stderr);
    run.info("predicted_rate", rep.predicted_rate);
    run.info("predicted_rate_full_noise", rep.predicted_rate_full);
    run.info("predicted_rate_translational_only", rep.predicted_rate_translational);
    run.info("r_squared", rep.r_squared);
    run.check("fit", rep.fit_accepted, "R^2 = " + num(rep.r_squared) + " below " + num(kMinRSquared));
    run.check("rate", rep.within(budget),
              "|fitted - predicted| = " + num(std::abs(rep.fitted_rate - rep.predicted_rate)) + " > 3*" +
                  num(rep.rate_stderr) + " + " + num(budget) + "*" + num(rep.predicted_rate));
    return run.finish({csv.path()});
}

// ---------------------------------------------------------------- ham check

int cmd_ham_check(const ExperimentConfig& cfg, const RunOptions&) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"random_inertias", "inertia_seed", "spot_points", "expect_satisfied"});
    const auto n_inertias = get_integer(cfg.experiment, w, "random_inertias", 0);
    const auto seed = get_seed(cfg.experiment, w, "inertia_seed", cfg.integrator.master_seed);
    const auto spots = get_integer(cfg.experiment, w, "spot_points", 10);
    const bool expect = get_bool(cfg.experiment, w, "expect_satisfied", cfg.n == 3);

    std::vector<InertiaOperator> inertias;
    StreamRng rng(seed, 0x4a3);
    if (n_inertias > 0) {
        for (std::int64_t k = 0; k < n_inertias; ++k) inertias.push_back(random_inertia(cfg.n, rng));
    } else {
        inertias.push_back(build_inertia(cfg));
    }

    Run run(cfg, "ham-check");
    run.add_tolerance("satisfied", kHamSatisfiedTol);
    CsvWriter csv(cfg, "ham_check", "ham_check/1", run.tolerances(),
                  {"inertia_id", "residual_identity", "max_residual_spot", "satisfied"});
    int satisfied = 0;
    for (std::size_t k = 0; k < inertias.size(); ++k) {
        const BallModel model(inertias[k]);
        const double r0 = ham_condition_residual(model);
        Max spot;
        for (std::int64_t j = 0; j < spots; ++j) spot.add(ham_condition_residual(model, random_group_point(cfg.n, rng)));
        const bool ok = r0 < kHamSatisfiedTol && spot.value < kHamSatisfiedTol;
        satisfied += ok;
        csv.row({std::to_string(k), num(r0), num(spot.value), ok ? "1" : "0"});
        if (expect) run.check("inertia_" + std::to_string(k), ok, "Hamiltonization condition residual " + num(std::max(r0, spot.value)));
    }
    run.info("satisfied", satisfied);
    run.info("inertias", inertias.size());
    run.info("expect_satisfied", expect);
    return run.finish({csv.path()});
}

// ---------------------------------------------------------------- drift report

int cmd_drift_report(const ExperimentConfig& cfg, const RunOptions&) {
    const std::string w = "experiment";
    reject_unknown(cfg.experiment, w, {"samples"});
    const auto samples = positive(get_integer(cfg.experiment, w, "samples", 50), "experiment.samples");
    const BallModel model(build_inertia(cfg));
    Run run(cfg, "drift-report");
    StreamRng rng(cfg.integrator.master_seed, 0xd71);
    std::vector<GroupPoint> pts;
    for (std::int64_t k = 0; k < samples; ++k) pts.push_back(random_group_point(cfg.n, rng));
    const DriftReport rep = drift_theorem_report(model, pts);

    run.add_tolerance("residual_theorem_derived", 1e-8);
    run.add_tolerance("max_mech_horiz", 1e-9);
    run.add_tolerance("max_vel_horiz_when_hamiltonizable", 1e-8);
    CsvWriter csv(cfg, "drift_report", "drift_report/2", run.tolerances(),
                  {"sample_id", "residual_theorem", "max_mech_horiz", "max_vel_horiz", "ham_residual",
                   "residual_theorem_derived"});
    Max vel_ham;
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        const auto& r = rep.rows[k];
        csv.row({std::to_string(k), num(r.residual_theorem), num(r.max_mech_horiz), num(r.max_vel_horiz),
                 num(r.ham_residual), num(r.residual_theorem_derived)});
        if (r.ham_residual < kHamSatisfiedTol) vel_ham.add(r.max_vel_horiz);
    }
    run.info("residual_theorem_max", rep.max.residual_theorem);
    run.info("max_vel_horiz", rep.max.max_vel_horiz);
    run.info("ham_residual_max", rep.max.ham_residual);
    run.gate("residual_theorem_derived", rep.max.residual_theorem_derived, 1e-8);
    run.gate("max_mech_horiz", rep.max.max_mech_horiz, 1e-9);
    run.gate("max_vel_horiz_when_hamiltonizable", vel_ham.value, 1e-8);
    return run.finish({csv.path()});
}

// ---------------------------------------------------------------- entry point

int run_cli(int argc, char** argv) {
    CLI::App app{"Stochastic Chaplygin ball on SO(n): simulation and verification"};
    app.require_subcommand(1);
    std::string config_path;
    int workers = 1;
    std::optional<std::uint64_t> seed;

    using Cmd = int (*)(const ExperimentConfig&, const RunOptions&);
    const std::vector<std::tuple<std::string, std::string, Cmd>> commands{
        {"verify", "analytic identity suite", cmd_verify},
        {"simulate", "simulate an ensemble of paths", cmd_simulate},
        {"generator-test", "Monte-Carlo vs analytic generator", cmd_generator_test},
        {"sphere-test", "decay of the sphere projection", cmd_sphere_test},
        {"ham-check", "Hamiltonization condition", cmd_ham_check},
        {"drift-report", "drift vs gradient of log N", cmd_drift_report},
    };
    std::map<CLI::App*, Cmd> dispatch;
    for (const auto& [name, desc, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
        sub->add_option("--seed", seed, "override integrator.master_seed");
        dispatch[sub] = fn;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const ExperimentConfig cfg = load_config(config_path, seed);
        for (const auto& [sub, fn] : dispatch)
            if (sub->parsed()) return fn(cfg, RunOptions{workers});
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const StepRejected& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const LogDomainError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace chaplygin
