#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedtier/cli.hpp"

using namespace fedtier;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kSourceDir = FEDTIER_SOURCE_DIR;

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fedtier_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("analyze straggler prints the closed-form probability") {
    const CliResult r = cli({"analyze", "straggler", "--k", "50", "--c", "5", "--slow", "10"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["pr_s"].get<double>() == doctest::Approx(0.68944).epsilon(1e-4));
}

TEST_CASE("analyze straggler-bound prints the closed-form bound") {
    const CliResult r =
        cli({"analyze", "straggler-bound", "--k", "50", "--c", "5", "--slow", "10"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["bound"].get<double>() ==
          doctest::Approx(0.67232).epsilon(1e-6));
}

TEST_CASE("analyze estimate prints the expected seconds") {
    const CliResult r = cli({"analyze", "estimate", "--latencies", "1,2,4,8,16", "--probs",
                             "0.2,0.2,0.2,0.2,0.2", "--rounds", "500"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["seconds"].get<double>() == doctest::Approx(3100.0));
}

TEST_CASE("analyze mape prints the percentage error") {
    const CliResult r = cli({"analyze", "mape", "--estimated", "12693", "--actual", "12643"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["mape_pct"].get<double>() == doctest::Approx(0.40).epsilon(0.02));
}

TEST_CASE("analyze privacy prints sampling factors next to the budget") {
    const CliResult r = cli({"analyze", "privacy", "--epsilon", "1.0", "--delta", "1e-5",
                             "--c", "5", "--k", "50", "--tier-sizes", "10,10,10,10,10"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["q_uniform"].get<double>() == doctest::Approx(0.1));
    CHECK(j["q_max"].get<double>() == doctest::Approx(0.1));
    CHECK(j["epsilon"].get<double>() == doctest::Approx(1.0));
    CHECK(j["q"].size() == 5);
}

TEST_CASE("bad numeric parameters exit with the usage code") {
    CHECK(cli({"analyze", "straggler", "--k", "0", "--c", "5", "--slow", "1"}).code == 2);
    CHECK(cli({"analyze", "estimate", "--latencies", "1,x", "--probs", "1",
               "--rounds", "5"}).code == 2);
    CHECK(cli({"analyze", "mape", "--estimated", "1"}).code == 2);  // missing flag
    CHECK(cli({"frobnicate"}).code == 2);
}

TEST_CASE("run writes the three artifacts and succeeds") {
    const fs::path dir = temp_dir("run");
    const CliResult r = cli({"run", "--config", kSourceDir + "/configs/golden.json",
                             "--out", dir.string()});
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "rounds.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "tiering.json"));
    fs::remove_all(dir);
}

TEST_CASE("a missing required field names itself and exits 2") {
    const fs::path bad = temp_dir("badcfg");
    fs::create_directories(bad);
    std::ofstream(bad / "cfg.json") << R"({"clients": 4, "clients_per_round": 1})";
    const CliResult r = cli({"run", "--config", (bad / "cfg.json").string(),
                             "--out", (bad / "out").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("tiers") != std::string::npos);
    fs::remove_all(bad);
}

TEST_CASE("an unreadable config exits 2") {
    CHECK(cli({"run", "--config", "/nonexistent/nowhere.json", "--out", "/tmp/x"}).code == 2);
}

TEST_CASE("a runtime failure exits 1") {
    // valid config, unwritable output location
    const CliResult r = cli({"run", "--config", kSourceDir + "/configs/golden.json",
                             "--out", "/proc/fedtier_cannot_write/out"});
    CHECK(r.code == 1);
}

TEST_CASE("a rounds override trims the csv") {
    const fs::path dir = temp_dir("rounds1");
    const CliResult r = cli({"run", "--config", kSourceDir + "/configs/golden.json",
                             "--rounds", "1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(dir / "rounds.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) {
        ++lines;
    }
    CHECK(lines == 2);  // header + one data row
    fs::remove_all(dir);
}

TEST_CASE("identical run invocations produce byte-identical artifacts") {
    const fs::path a = temp_dir("det_a");
    const fs::path b = temp_dir("det_b");
    REQUIRE(cli({"run", "--config", kSourceDir + "/configs/golden.json", "--out",
                 a.string()}).code == 0);
    REQUIRE(cli({"run", "--config", kSourceDir + "/configs/golden.json", "--out",
                 b.string()}).code == 0);
    CHECK(slurp(a / "rounds.csv") == slurp(b / "rounds.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    CHECK(slurp(a / "tiering.json") == slurp(b / "tiering.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("artifacts match the committed golden files") {
    const fs::path dir = temp_dir("golden");
    REQUIRE(cli({"run", "--config", kSourceDir + "/configs/golden.json", "--out",
                 dir.string()}).code == 0);
    CHECK(slurp(dir / "rounds.csv") == slurp(kSourceDir + "/tests/golden/rounds.csv"));
    CHECK(slurp(dir / "summary.json") == slurp(kSourceDir + "/tests/golden/summary.json"));
    CHECK(slurp(dir / "tiering.json") == slurp(kSourceDir + "/tests/golden/tiering.json"));
    fs::remove_all(dir);
}

TEST_CASE("sweep compares the five reference policies") {
    const fs::path dir = temp_dir("sweep");
    const CliResult r = cli({"sweep", "--config", kSourceDir + "/configs/golden.json",
                             "--policies", "vanilla,slow,uniform,random,fast", "--rounds",
                             "40", "--out", dir.string()});
    CAPTURE(r.err);
    REQUIRE(r.code == 2);  // 5-tier presets cannot run on a 3-tier config
    fs::remove_all(dir);
}

TEST_CASE("sweep on a matching config writes one csv per policy plus the comparison") {
    const fs::path dir = temp_dir("sweep_ok");
    const CliResult r = cli({"sweep", "--config", kSourceDir + "/configs/reference.json",
                             "--policies", "vanilla,slow,uniform,random,fast", "--rounds",
                             "60", "--out", dir.string()});
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    const json cmp = json::parse(slurp(dir / "comparison.json"));
    REQUIRE(cmp["policies"].size() == 5);
    for (const std::string name : {"vanilla", "slow", "uniform", "random", "fast"}) {
        CHECK(fs::exists(dir / ("rounds_" + name + ".csv")));
    }
    double vanilla_speedup = 0.0, fast_speedup = 0.0, uniform_speedup = 0.0;
    for (const auto& entry : cmp["policies"]) {
        const double speedup = entry["speedup_vs_vanilla"].get<double>();
        if (entry["policy"] == "vanilla") {
            vanilla_speedup = speedup;
        } else if (entry["policy"] == "fast") {
            fast_speedup = speedup;
        } else if (entry["policy"] == "uniform") {
            uniform_speedup = speedup;
        }
    }
    CHECK(vanilla_speedup == doctest::Approx(1.0));
    CHECK(fast_speedup >= uniform_speedup);
    CHECK(uniform_speedup >= 1.0);

    // determinism across sweep invocations
    const fs::path dir2 = temp_dir("sweep_ok2");
    REQUIRE(cli({"sweep", "--config", kSourceDir + "/configs/reference.json", "--policies",
                 "vanilla,slow,uniform,random,fast", "--rounds", "60", "--out",
                 dir2.string()}).code == 0);
    CHECK(slurp(dir / "comparison.json") == slurp(dir2 / "comparison.json"));
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("help exits zero") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"analyze", "--help"}).code == 0);
}
