#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chaplygin/cli_runner.hpp"

using namespace chaplygin;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("chaplygin_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "chaplygin_cli");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string config_error(const json& doc) {
    try {
        parse_config(doc, ".");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Format, RoundTripsShortest) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Hash, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, Defaults) {
    const ExperimentConfig c = parse_config(json{{"n", 4}}, "/base");
    EXPECT_EQ(c.n, 4);
    EXPECT_EQ(c.inertia.kind, "identity");
    EXPECT_TRUE(c.noise.angular && c.noise.translational);
    EXPECT_EQ(c.integrator.scheme, Scheme::heun_exp);
    EXPECT_DOUBLE_EQ(c.integrator.h, 1e-3);
    EXPECT_EQ(c.output_dir, fs::path("/base/."));
    EXPECT_EQ(c.hash.size(), 16u);
}

TEST(Config, FullDocument) {
    const json doc = json::parse(R"({
        "n": 3,
        "inertia": {"kind": "masses", "masses": [1, 2, 3]},
        "noise": {"angular": false},
        "integrator": {"h": 0.01, "scheme": "euler_exp", "reorth_interval": 5, "master_seed": 7, "path_count": 9},
        "experiment": {"T": 1},
        "output_dir": "out"
    })");
    const ExperimentConfig c = parse_config(doc, "/base", 11);
    EXPECT_EQ(c.inertia.masses, (std::vector<double>{1, 2, 3}));
    EXPECT_FALSE(c.noise.angular);
    EXPECT_EQ(c.integrator.scheme, Scheme::euler_exp);
    EXPECT_EQ(c.integrator.master_seed, 11u);
    EXPECT_EQ(c.effective["integrator"]["master_seed"], 11);
    EXPECT_EQ(c.integrator.path_count, 9);
    EXPECT_EQ(c.output_dir, fs::path("/base/out"));
    EXPECT_NE(c.hash, parse_config(doc, "/base", 12).hash);
    EXPECT_EQ(c.hash, parse_config(doc, "/base", 11).hash);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_NE(config_error(json{{"n", 3}, {"bogus", 1}}).find("'bogus'"), std::string::npos);
    EXPECT_NE(config_error(json::object()).find("'n'"), std::string::npos);
    EXPECT_NE(config_error(json{{"n", 2}}).find("'n'"), std::string::npos);
    EXPECT_NE(config_error(json{{"n", "3"}}).find("'n'"), std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"integrator", {{"h", -1}}}}).find("h must be positive"), std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"integrator", {{"scheme", "rk"}}}}).find("integrator.scheme"),
              std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"noise", {{"angle", true}}}}).find("noise.angle"), std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"inertia", {{"kind", "masses"}, {"masses", {1, 2}}}}}).find("inertia.masses"),
              std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"inertia", {{"kind", "matrix"}, {"path", "/nonexistent/x"}}}})
                  .find("inertia.path"),
              std::string::npos);
    EXPECT_NE(config_error(json{{"n", 3}, {"inertia", {{"kind", "blob"}}}}).find("inertia.kind"), std::string::npos);
}

TEST(Config, LoadReportsParsePosition) {
    TempDir dir;
    const fs::path p = write_file(dir.path() / "bad.json", "{\n  \"n\": 3,\n  oops\n}\n");
    try {
        load_config(p);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Inertia, BuildVariants) {
    TempDir dir;
    write_file(dir.path() / "g.txt", "2 0 0\n0 3 0\n0 0 4\n");
    const json doc{{"n", 3}, {"inertia", {{"kind", "matrix"}, {"path", "g.txt"}}}};
    const ExperimentConfig c = parse_config(doc, dir.path());
    EXPECT_DOUBLE_EQ(build_inertia(c).gram()(2, 2), 4.0);

    write_file(dir.path() / "bad.txt", "1 0 0\n0 1 0\n0 0\n");
    const ExperimentConfig bad = parse_config(json{{"n", 3}, {"inertia", {{"kind", "matrix"}, {"path", "bad.txt"}}}},
                                              dir.path());
    EXPECT_THROW(build_inertia(bad), ConfigError);

    const json r{{"n", 4}, {"inertia", {{"kind", "random"}, {"seed", 5}}}};
    EXPECT_EQ(build_inertia(parse_config(r, ".")).gram(), build_inertia(parse_config(r, ".")).gram());
}

TEST(Cli, SimulateIsByteIdenticalAcrossWorkers) {
    TempDir dir;
    const fs::path cfg = write_file(dir.path() / "sim.json", R"({
        "n": 3,
        "inertia": {"kind": "random", "seed": 3},
        "integrator": {"h": 0.01, "path_count": 40, "master_seed": 17},
        "experiment": {"T": 0.5, "snapshot_stride": 10},
        "output_dir": "out"
    })");
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--workers", "1"}), kExitPass);
    const std::string one = slurp(dir.path() / "out" / "simulate.csv");
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--workers", "8"}), kExitPass);
    const std::string eight = slurp(dir.path() / "out" / "simulate.csv");
    EXPECT_FALSE(one.empty());
    EXPECT_EQ(one, eight);
    EXPECT_EQ(one.find('\r'), std::string::npos);
    EXPECT_EQ(one.rfind("# chaplygin 1.0.0 schema=simulate/1", 0), 0u);

    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--seed", "18"}), kExitPass);
    EXPECT_NE(slurp(dir.path() / "out" / "simulate.csv"), one);

    const json meta = json::parse(slurp(dir.path() / "out" / "simulate.json"));
    EXPECT_EQ(meta["pass"], true);
    EXPECT_EQ(meta["master_seed"], 18);
    EXPECT_TRUE(meta.contains("wall_clock_seconds"));
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    const std::string out = (dir.path() / "out").string();
    auto conf = [&](const std::string& name, json doc) {
        doc["output_dir"] = out;
        return write_file(dir.path() / name, doc.dump()).string();
    };
    EXPECT_EQ(cli({"verify", "--config", conf("v.json", {{"n", 3}, {"experiment", {{"samples", 5}}}})}), kExitPass);
    EXPECT_EQ(cli({"verify", "--config", conf("bad.json", {{"n", 3}, {"what", 1}})}), kExitConfig);
    EXPECT_EQ(cli({"drift-report", "--config", conf("dr.json", {{"n", 3}, {"experiment", {{"dims", {3}}}}})}),
              kExitConfig);
    EXPECT_EQ(cli({"verify", "--config", (dir.path() / "missing.json").string()}), kExitConfig);
    EXPECT_EQ(cli({"nonsense"}), kExitConfig);
    // A step far outside the exp/log safety region aborts numerically.
    EXPECT_EQ(cli({"simulate", "--config",
                   conf("big.json", {{"n", 3}, {"integrator", {{"h", 4.0}}}, {"experiment", {{"T", 4.0}}}})}),
              kExitNumerical);
    // n = 4 random inertia violates the Hamiltonization condition it is told to expect.
    EXPECT_EQ(cli({"ham-check", "--config",
                   conf("hc.json", {{"n", 4},
                                    {"experiment", {{"random_inertias", 2}, {"spot_points", 2}, {"expect_satisfied", true}}}})}),
              kExitFail);
}

TEST(Cli, DriftReportWritesSchema) {
    TempDir dir;
    const fs::path cfg = write_file(dir.path() / "d.json",
                                    R"({"n": 3, "inertia": {"kind": "random"}, "experiment": {"samples": 4}})");
    cli({"drift-report", "--config", cfg.string()});
    const std::string csv = slurp(dir.path() / "drift_report.csv");
    EXPECT_NE(csv.find("schema=drift_report/2"), std::string::npos);
    std::istringstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2 + 4);
}
