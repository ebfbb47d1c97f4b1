#include "cli_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <numbers>

using namespace clitest;

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    if (!v) throw std::runtime_error(std::string("environment variable ") + name + " is not set");
    return v;
}

Workspace& ws() {
    static Workspace w(env("BBGP_CLI"));
    return w;
}

fs::path data_dir() { return env("BBGP_TEST_DATA"); }

Csv run_csv(const std::string& sub, const std::string& json, const std::string& extra = "") {
    const fs::path cfg = ws().config("cfg.json", json);
    const fs::path out = ws().dir / "out.csv";
    fs::remove(out);
    const int rc = ws().run(sub, cfg, out, extra);
    INFO(ws().last_stderr());
    REQUIRE(rc == 0);
    return parse_csv(read_file(out));
}

const double pi = std::numbers::pi;

}  // namespace

TEST_CASE("solve reproduces an eigenfunction") {
    const Csv csv = run_csv("solve", R"j({"source": "pi^2 * sin(pi*x)", "grid": {"points": 101}})j");
    REQUIRE(csv.columns == std::vector<std::string>{"x", "u0"});
    REQUIRE(csv.rows.size() == 101);
    for (const auto& r : csv.rows) CHECK(std::abs(r[1] - std::sin(pi * r[0])) < 1e-8);
}

TEST_CASE("solve with a zero source") {
    const Csv csv = run_csv("solve", R"j({"source": "0"})j");
    for (const auto& r : csv.rows) CHECK(r[1] == 0.0);
}

TEST_CASE("solve matches the finite-difference fixture") {
    const Csv fd = parse_csv(read_file(data_dir() / "poisson_fd_gaussian.csv"));
    const Csv csv = run_csv("solve", R"j({"source": "10*exp(-(x-0.25)^2)", "kernel": {"order": 512}, "grid": {"points": 65}})j");
    REQUIRE(csv.rows.size() == fd.rows.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.rows.size(); ++i) {
        CHECK(csv.rows[i][0] == doctest::Approx(fd.rows[i][0]));
        worst = std::max(worst, std::abs(csv.rows[i][1] - fd.rows[i][1]));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("two-dimensional solve emits one column per coordinate") {
    const Csv csv = run_csv("solve", R"j({"source": "2*pi^2*sin(pi*x1)*sin(pi*x2)", "kernel": {"dim": 2, "order": 8},
                                          "grid": {"points": 5}})j");
    REQUIRE(csv.columns == std::vector<std::string>{"x1", "x2", "u0"});
    REQUIRE(csv.rows.size() == 25);
    for (const auto& r : csv.rows) CHECK(std::abs(r[2] - std::sin(pi * r[0]) * std::sin(pi * r[1])) < 1e-8);
}

TEST_CASE("sample reproduces the bridge variance and pins the boundary") {
    const Csv csv = run_csv("sample", R"j({"source": "0", "grid": {"points": 5}, "draws": 3, "moment_draws": 20000,
                                          "seed": 3})j");
    REQUIRE(csv.columns == std::vector<std::string>{"x", "mean", "sd", "sample_1", "sample_2", "sample_3"});
    const auto& mid = csv.rows[2];
    REQUIRE(mid[0] == 0.5);
    // sd of the sample sd for a Gaussian is about sigma / sqrt(2 N)
    CHECK(std::abs(mid[2] - 0.5) < 3 * 0.5 / std::sqrt(2 * 20000.0));
    for (const auto* r : {&csv.rows.front(), &csv.rows.back()})
        for (std::size_t j = 1; j < r->size(); ++j) CHECK((*r)[j] == 0.0);
}

TEST_CASE("sample beta sweep scales the standard deviation") {
    const Csv csv = run_csv("sample", R"j({"source": "10*exp(-(x-0.25)^2)", "grid": {"points": 3}, "draws": 1,
                                          "moment_draws": 2000, "betas": [0.1, 1, 10, 100]})j");
    REQUIRE(csv.columns.front() == "beta");
    std::map<double, double> sd_mid;
    for (const auto& r : csv.rows)
        if (r[1] == 0.5) sd_mid[r[0]] = r[csv.col("sd")];
    REQUIRE(sd_mid.size() == 4);
    // common random numbers make the scaling exact up to rounding
    for (const auto& [beta, sd] : sd_mid) CHECK(sd * std::sqrt(beta) == doctest::Approx(sd_mid[1.0]).epsilon(1e-10));
}

TEST_CASE("fit reproduces the stored fixture") {
    const fs::path out = ws().dir / "fit.csv";
    REQUIRE(ws().run("fit", data_dir() / "fit_config.json", out) == 0);
    const Csv got = parse_csv(read_file(out));
    const Csv want = parse_csv(read_file(data_dir() / "fit_expected.csv"));
    REQUIRE(got.rows.size() == want.rows.size());
    for (const char* col : {"mean", "sd"}) {
        const auto a = got.column(col), b = want.column(col);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-8);
    }
}

TEST_CASE("beta flags the Dirac limit without model error") {
    const Csv csv = run_csv("beta", R"j({"kernel": {"order": 500}, "source": "10*exp(-(x-0.25)^2)",
                                        "data": {"kind": "coefficients", "epsilon": 0, "sigma2": 1e-12}})j");
    CHECK(csv.meta("dirac_limit") == "true");
    CHECK(csv.rows.at(0)[csv.col("dirac_limit")] == 1.0);
    CHECK(std::isnan(csv.rows.at(0)[csv.col("beta_formula")]));
}

TEST_CASE("beta under model error tracks the flat-prior limit") {
    const Csv csv = run_csv("beta", R"j({"kernel": {"order": 2000}, "source": "10*exp(-(x-0.25)^2)",
                                        "data": {"kind": "coefficients", "epsilon": 1, "sigma2": 1e-12}})j");
    CHECK(csv.meta("dirac_limit") == "false");
    CHECK(std::abs(csv.rows.at(0)[csv.col("ratio")] - 1.0) < 0.1);
}

TEST_CASE("invert recovers linear source parameters") {
    const Csv csv = run_csv("invert", R"j({"kernel": {"order": 128},
        "data": {"truth": "x*(1-x)*(2 + 3*x)", "n": 40, "sigma2": 1e-10},
        "basis": ["1", "x"], "hyper": "fixed", "beta_fixed": 1})j");
    REQUIRE(csv.rows.size() == 2);
    CHECK(csv.rows[0][csv.col("mean")] == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(csv.rows[1][csv.col("mean")] == doctest::Approx(18.0).epsilon(1e-3));
    CHECK(std::stod(csv.meta("cov_trace")) > 0.0);
}

TEST_CASE("study convergence emits a slope on the default recipe") {
    const Csv csv = run_csv("study convergence", "{}");
    CHECK(std::stod(csv.meta("slope")) <= -0.9);
    CHECK(csv.rows.size() == 6);
}

TEST_CASE("study model-error lists the sweep") {
    const Csv csv = run_csv("study model-error", R"j({"epsilons": [0, 1], "kernel": {"order": 500}, "observed": 500})j");
    REQUIRE(csv.rows.size() == 2);
    CHECK(csv.rows[0][csv.col("dirac_limit")] == 1.0);
    CHECK(std::abs(csv.rows[1][csv.col("ratio")] - 1.0) < 0.1);
}

TEST_CASE("json output carries config, seed and rows") {
    const fs::path cfg = ws().config("j.json", R"j({"source": "0", "grid": {"points": 4}, "seed": 9})j");
    const fs::path out = ws().dir / "out.json";
    REQUIRE(ws().run("solve", cfg, out, "--format json") == 0);
    const auto j = nlohmann::json::parse(read_file(out));
    CHECK(j["seed"] == 9);
    CHECK(j["config"]["source"] == "0");
    CHECK(j["columns"].size() == 2);
    CHECK(j["rows"].size() == 4);
}

TEST_CASE("the seed flag overrides the config") {
    const fs::path cfg = ws().config("s.json", R"j({"grid": {"points": 3}, "draws": 1, "moment_draws": 10, "seed": 1})j");
    const fs::path a = ws().dir / "a.csv", b = ws().dir / "b.csv";
    REQUIRE(ws().run("sample", cfg, a, "--seed 1") == 0);
    REQUIRE(ws().run("sample", cfg, b, "--seed 2") == 0);
    CHECK(read_file(a) != read_file(b));
    CHECK(parse_csv(read_file(b)).meta("seed") == "2");
}

TEST_CASE("outputs are byte-identical across runs") {
    const std::vector<std::pair<std::string, std::string>> runs{
        {"solve", R"j({"source": "10*exp(-(x-0.25)^2)"})j"},
        {"sample", R"j({"draws": 4, "moment_draws": 500, "seed": 5})j"},
        {"fit", R"j({"data": {"truth": "sin(pi*x)", "n": 12, "design": "random", "noise_sd": 0.01}, "seed": 8})j"},
        {"beta", R"j({"kernel": {"order": 300}, "data": {"kind": "coefficients", "epsilon": 1, "noise": true}})j"},
        {"invert", R"j({"data": {"truth": "x*(1-x)", "n": 20}, "basis": ["1"]})j"},
        {"study convergence", R"j({"ns": [16, 32, 64], "noisy": true})j"},
        {"study model-error", R"j({"epsilons": [1], "kernel": {"order": 300}, "observed": 300, "noisy": true})j"},
    };
    for (const auto& [sub, json] : runs) {
        for (const char* format : {"csv", "json"}) {
            const fs::path cfg = ws().config("det.json", json);
            const fs::path a = ws().dir / "det_a", b = ws().dir / "det_b";
            REQUIRE(ws().run(sub, cfg, a, std::string("--format ") + format) == 0);
            REQUIRE(ws().run(sub, cfg, b, std::string("--format ") + format) == 0);
            INFO(sub, " ", format);
            CHECK(read_file(a) == read_file(b));
        }
    }
}

TEST_CASE("the embedded config re-parses to the same run") {
    const Csv first = run_csv("fit", R"j({"data": {"truth": "sin(pi*x)", "n": 9, "noise_sd": 0.05}, "seed": 4})j");
    const std::string echo = first.meta("config");
    const fs::path cfg = ws().config("echo.json", echo);
    const fs::path out = ws().dir / "echo.csv";
    REQUIRE(ws().run("fit", cfg, out) == 0);
    const Csv second = parse_csv(read_file(out));
    CHECK(second.meta("config") == echo);
    CHECK(second.rows == first.rows);
}

TEST_CASE("configuration errors exit with status 2") {
    const fs::path out = ws().dir / "err.csv";
    CHECK(ws().run("solve", ws().config("e1.json", R"j({"source": "0", "colour": 1})j"), out) == 2);
    CHECK(ws().last_stderr().find("colour") != std::string::npos);
    CHECK(ws().run("solve", ws().config("e2.json", R"j({"source": "0", "grid": {"pts": 3}})j"), out) == 2);
    CHECK(ws().last_stderr().find("grid.pts") != std::string::npos);
    CHECK(ws().run("solve", ws().config("e3.json", "{\n  \"source\": \"0\",\n}"), out) == 2);
    CHECK(ws().last_stderr().find("line 3") != std::string::npos);
    CHECK(ws().run("solve", ws().config("e4.json", R"j({"source": "sin(x"})j"), out) == 2);
    CHECK(ws().run("solve", ws().config("e5.json", R"j({"source": "0", "kernel": {"beta": "one"}})j"), out) == 2);
    CHECK(ws().run("solve", ws().config("e6.json", R"j({"source": "0", "kernel": {"family": "matern"}})j"), out) == 2);
    CHECK(ws().run("fit", ws().config("e7.json", R"j({"data": {"path": "missing.csv"}})j"), out) == 2);
    CHECK(ws().run("frobnicate") == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("numerical failures exit with status 3") {
    const fs::path out = ws().dir / "num.csv";
    CHECK(ws().run("solve", ws().config("n1.json", R"j({"source": "1", "kernel": {"family": "helmholtz", "omega": 6.283185307179586}})j"),
                   out) == 3);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("resource limits exit with status 4") {
    const fs::path out = ws().dir / "res.csv";
    CHECK(ws().run("solve", ws().config("r1.json", R"j({"source": "0", "kernel": {"dim": 3, "order": 200}})j"), out) == 4);
    CHECK(ws().run("sample", ws().config("r2.json", R"j({"draws": 100000000, "grid": {"points": 1001}})j"), out) == 4);
    CHECK_FALSE(fs::exists(out));
}
