#include "lcl/cli.hpp"
#include "lcl/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace lcl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "lcl_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    io::write_atomic(p, j.dump(2));
    return p;
}

json small_run() {
    return {{"schema_version", 1}, {"n", 60},        {"dt", 1e-3}, {"horizon", 0.01},
            {"record_every", 5},   {"residuals", true}, {"w2_every", 1}};
}

}  // namespace

TEST_CASE("w2 of the two-point example") {
    const auto dir = fresh_dir("w2");
    io::write_atomic(dir / "a.csv", "vx,vy,vz\r\n0,0,0\r\n2,0,0\r\n");
    io::write_atomic(dir / "b.csv", "vx,vy,vz\r\n1,0,0\r\n3,0,0\r\n");
    const auto r = run({"w2", (dir / "a.csv").string(), (dir / "b.csv").string(), "--out", dir.string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.out == "1.0\n");
    const auto w2 = json::parse(io::read_file(dir / "w2.json"));
    CHECK(w2["distance"] == 1.0);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("validation errors exit with 1 and write no manifest") {
    const auto dir = fresh_dir("bad");
    CHECK(run({"frobnicate"}).code == cli::kValidationError);
    CHECK(run({"frobnicate"}).err.find("unknown subcommand \"frobnicate\"") != std::string::npos);
    CHECK(run({}).code == cli::kValidationError);
    io::write_atomic(dir / "c.json", "{\n  \"schema_version\": 1,\n  \"bogus\": 2\n}");
    const auto r = run({"simulate", "--config", (dir / "c.json").string(), "--out", dir.string()});
    CHECK(r.code == cli::kValidationError);
    CHECK(r.err.find("config: line 3: unknown key \"bogus\"") != std::string::npos);
    CHECK(!fs::exists(dir / "manifest.json"));
    CHECK(run({"w2", "only_one.csv"}).code == cli::kValidationError);
    CHECK(run({"w2", "missing_a.csv", "missing_b.csv", "--out", dir.string()}).code == cli::kValidationError);
}

TEST_CASE("simulate writes its outputs and replays from the manifest") {
    const auto dir = fresh_dir("sim");
    const auto cfg = write_config(dir, small_run());
    const auto r = run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--quiet"});
    REQUIRE(r.code == cli::kOk);
    for (const char* f : {"initial.csv", "trajectory.csv", "final.csv", "residuals.csv", "manifest.json"})
        CHECK(fs::exists(dir / "a" / f));
    const auto traj = io::parse_csv(io::read_file(dir / "a" / "trajectory.csv"));
    CHECK(traj.header == io::kTrajectoryColumns);
    CHECK(traj.rows.size() == 3);

    const auto manifest = json::parse(io::read_file(dir / "a" / "manifest.json"));
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["subcommand"] == "simulate");
    CHECK(manifest["config"]["n"] == 60);

    // The manifest is itself a config; the replay is bitwise identical.
    const auto again =
        run({"simulate", "--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "b").string(), "--quiet"});
    REQUIRE(again.code == cli::kOk);
    CHECK(io::read_file(dir / "a" / "final.csv") == io::read_file(dir / "b" / "final.csv"));
    CHECK(io::read_file(dir / "a" / "trajectory.csv") == io::read_file(dir / "b" / "trajectory.csv"));

    // --seed overrides the config and changes the path.
    REQUIRE(run({"simulate", "--config", cfg.string(), "--seed", "99", "--out", (dir / "c").string(), "--quiet"}).code ==
            cli::kOk);
    CHECK(io::read_file(dir / "a" / "final.csv") != io::read_file(dir / "c" / "final.csv"));
    CHECK(json::parse(io::read_file(dir / "c" / "manifest.json"))["seed"] == 99);
}

TEST_CASE("couple from identical initials keeps rho_hat at zero") {
    const auto dir = fresh_dir("couple");
    auto j = small_run();
    j["second"] = "identical";
    const auto r = run({"couple", "--config", write_config(dir, j).string(), "--out", dir.string(), "--quiet"});
    REQUIRE(r.code == cli::kOk);
    const auto env = io::parse_csv(io::read_file(dir / "envelope.csv"));
    CHECK(env.header == io::kEnvelopeColumns);
    for (const auto& row : env.rows) CHECK(std::stod(row[4]) == 0.0);
    const auto first = io::parse_csv(io::read_file(dir / "trajectory_first.csv"));
    for (const auto& row : first.rows) CHECK(std::stod(row[8]) == 0.0);
    CHECK(io::read_file(dir / "final_first.csv") == io::read_file(dir / "final_second.csv"));
}

TEST_CASE("stability and kernel checks") {
    const auto dir = fresh_dir("stab");
    auto j = small_run();
    j["identity_samples"] = 2000;
    j["lipschitz_pairs"] = 2000;
    const auto cfg = write_config(dir, j);
    REQUIRE(run({"stability", "--config", cfg.string(), "--out", dir.string(), "--quiet"}).code == cli::kOk);
    const auto st = io::parse_csv(io::read_file(dir / "stability.csv"));
    CHECK(st.header == io::kStabilityColumns);
    REQUIRE(st.rows.size() == 3);
    CHECK(std::stod(st.rows[0][1]) == doctest::Approx(0.04).epsilon(1e-12));

    REQUIRE(run({"check-kernels", "--config", cfg.string(), "--out", dir.string(), "--quiet"}).code == cli::kOk);
    const auto k = json::parse(io::read_file(dir / "kernels.json"));
    CHECK(k.is_object());
}

TEST_CASE("a failed check exits with 3") {
    const auto dir = fresh_dir("fail");
    auto j = small_run();
    j["identity_samples"] = 1000;
    j["lipschitz_pairs"] = 1000;
    j["sigma_constant"] = 0.01;
    const auto r = run({"check-kernels", "--config", write_config(dir, j).string(), "--out", dir.string(), "--quiet"});
    CHECK(r.code == cli::kAssertionFailure);
    const auto manifest = json::parse(io::read_file(dir / "manifest.json"));
    CHECK(manifest["exit_code"] == 3);
    CHECK(!manifest["failed_checks"].empty());
}
