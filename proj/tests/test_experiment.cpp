#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/experiment.hpp"

using namespace plap;
using namespace plap::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("plap_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

RunResult run_in(const std::string& command, const std::string& config, const fs::path& dir) {
    auto spec = parse_spec(command, config);
    spec.output_dir = dir.string();
    return run(spec);
}

}  // namespace

TEST_CASE("config parsing", "[experiment][config]") {
    const auto s = parse_spec("kappa", R"({"command": "kappa", "seed": 9, "params": {"N": 3}})");
    CHECK(s.command == "kappa");
    CHECK(s.seed == 9);
    CHECK(s.params["N"] == 3);

    const auto bare = parse_spec("ellipsoid", R"({"samples": 10})");
    CHECK(bare.params["samples"] == 10);

    try {
        parse_spec("kappa", "{\n  \"N\": 2\n  \"p_grid\": [1, 0.1, 2]\n}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_spec("kappa", R"({"command": "solve", "params": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_spec("bogus", "{}"), ConfigError);
    CHECK_THROWS_AS(parse_spec("kappa", "[1, 2]"), ConfigError);
}

TEST_CASE("schema errors name the offending field", "[experiment][config]") {
    const auto dir = scratch("schema");
    try {
        run_in("identity", R"({"trials": "many"})", dir);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("params.trials") != std::string::npos);
    }
    CHECK_THROWS_AS(run_in("sharpness", R"({"delta": 0.5})", dir), ConfigError);
    CHECK_THROWS_AS(run_in("solve", R"({"p": 0.5})", dir), ConfigError);
    CHECK_THROWS_AS(run_in("kappa", R"({"p_grid": [1, -0.1, 2]})", dir), ConfigError);
}

TEST_CASE("kappa table", "[experiment][kappa]") {
    const auto dir = scratch("kappa");
    const auto res = run_in("kappa", R"({"command":"kappa","params":{"N":2,"p_grid":[1,0.01,4]}})", dir);
    CHECK(res.failures == 0);
    CHECK(res.rows == 301);
    CHECK(res.summary["sign_change_error"].get<double>() <= 1e-12);
    const std::string csv = slurp(dir / "kappa.csv");
    CHECK(csv.rfind("# command=kappa", 0) == 0);
    CHECK(csv.find("p,N,kappa,status") != std::string::npos);
    CHECK(fs::exists(dir / "kappa.json"));
}

TEST_CASE("runs are deterministic for a fixed seed", "[experiment][determinism]") {
    const std::string cfg = R"({"command":"identity","seed":7,"params":{"trials":200,"p":[1.5,3]}})";
    const auto a = scratch("det_a"), b = scratch("det_b");
    const auto ra = run_in("identity", cfg, a);
    const auto rb = run_in("identity", cfg, b);
    CHECK(ra.failures == 0);
    CHECK(ra.rows == rb.rows);
    CHECK(slurp(a / "identity.csv") == slurp(b / "identity.csv"));

    auto other = parse_spec("identity", cfg);
    other.seed = 8;
    other.output_dir = scratch("det_c").string();
    run(other);
    CHECK(slurp(a / "identity.csv") != slurp(fs::path(other.output_dir) / "identity.csv"));
}

TEST_CASE("every command runs on a small config", "[experiment][commands]") {
    const auto dir = scratch("all");
    CHECK(run_in("sharpness", R"({"delta":0.5,"sigma":0.5625,"restarts":5,"iterations":2000})", dir).failures == 0);
    CHECK(run_in("ellipsoid", R"({"samples":500})", dir).failures == 0);
    CHECK(run_in("orlicz", R"({"p":3,"epsilon":0.01,"limit":{"L":10,"k_max":20}})", dir).failures == 0);
    CHECK(run_in("solve", R"({"p":1.5,"N":2,"f":"constant","grid":{"nodes":17}})", dir).failures == 0);
    CHECK(run_in("local", R"({"p":2,"grid":{"nodes":17}})", dir).failures == 0);
    for (const char* f : {"sharpness.csv", "ellipsoid.csv", "orlicz.csv", "solve_trace.csv", "solve_norms.csv",
                          "local.csv", "local.json"})
        CHECK(fs::exists(dir / f));
}

TEST_CASE("orlicz limit rows report failures honestly", "[experiment][commands]") {
    const auto dir = scratch("limit");
    const auto res = run_in("orlicz", R"({"p":1.5,"epsilon":0.01,"limit":{"L":10,"k_max":20}})", dir);
    CHECK(res.failures >= 1);
    CHECK(slurp(dir / "orlicz.csv").find("FAIL") != std::string::npos);
}
