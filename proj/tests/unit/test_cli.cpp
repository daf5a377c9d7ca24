#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "opengossip/cli/commands.hpp"
#include "opengossip/cli/config.hpp"
#include "opengossip/cli/table.hpp"
#include "opengossip/errors.hpp"

using namespace opengossip;
using namespace opengossip::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int status = -1;
    std::string out;
};

Run run_cli(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / ("opengossip_cli_test_" + std::to_string(std::rand()) + ".txt");
    const std::string cmd = std::string("\"") + OPENGOSSIP_CLI_PATH + "\" " + args + " > \"" + out.string() +
                            "\" 2> /dev/null";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    fs::remove(out);
    return r;
}

void check_golden(const std::string& args, const std::string& file) {
    const auto r = run_cli(args);
    REQUIRE(r.status == 0);
    const fs::path golden = fs::path(OPENGOSSIP_GOLDEN_DIR) / file;
    if (std::getenv("OPENGOSSIP_UPDATE_GOLDEN")) {
        std::ofstream(golden, std::ios::binary) << r.out;
        return;
    }
    REQUIRE(fs::exists(golden));
    CHECK(r.out == slurp(golden));
}

}  // namespace

TEST_CASE("config validation names the offending field") {
    auto c = preset("fig3");
    c.replications = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = preset("fig3");
    c.rates.lambda_a = 1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("lambda_a"), ConfigError);

    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"mode": "fixed", "colour": 3})")), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"mode": "sideways"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"rates": {"lambda_q": 1}})")), ConfigError);
    CHECK_THROWS_AS(preset("fig2"), ConfigError);
    CHECK_THROWS_AS(run_command("plot", preset("fig3")), ConfigError);
    CHECK_THROWS_AS(run_command("bound", preset("fig3")), ConfigError);
    CHECK_THROWS_AS(run_command("spectrum", preset("fig5")), ConfigError);
}

TEST_CASE("config parsing layers over a base") {
    const auto doc = nlohmann::json::parse(R"({"rates": {"lambda_g": 4}, "seed": 9, "policies": ["min_abs"]})");
    const auto c = parse_config(doc, preset("fig4"));
    CHECK(c.rates.lambda_g == 4.0);
    CHECK(c.rates.lambda_r == 1.0);
    CHECK(c.seed == 9);
    CHECK(c.n == 4);
    REQUIRE(c.policies.size() == 1);
    CHECK(c.policies[0] == "min_abs");
}

TEST_CASE("config hash ignores threads and output, tracks results") {
    auto a = preset("fig3");
    auto b = a;
    b.threads = 7;
    b.out_path = "x.csv";
    b.format = OutputFormat::Json;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.seed = 2;
    CHECK(a.hash() != b.hash());
    // Round trip through the canonical document.
    CHECK(parse_config(a.canonical_json()).hash() == a.hash());
}

TEST_CASE("csv formatting") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(std::stod(format_double(21.0 / 1981.0)) == 21.0 / 1981.0);

    ResultTable t;
    t.name = "demo";
    t.columns = {"k", "v"};
    t.add_meta("note", "x");
    t.add_row({std::int64_t{1}, 2.5});
    t.add_row({std::string("a,b"), std::nan("")});
    CHECK_THROWS_AS(t.add_row({1.0}), std::logic_error);
    const auto csv = t.to_csv();
    CHECK(csv == "# table: demo\n# note: x\nk,v\n1,2.5\n\"a,b\",nan\n");
    const auto rows = data_rows(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "k,v");
    CHECK(t.number(0, "v") == 2.5);
}

TEST_CASE("golden outputs") {
    check_golden("spectrum --preset fig3", "spectrum_fig3.csv");
    check_golden("analyze --preset fig1 --grid-points 11", "analyze_fig1.csv");
    check_golden("simulate --preset fig1 --t-end 0.5 --grid-points 6", "simulate_fig1_trajectory.csv");
    check_golden("simulate --preset fig4 --replications 64 --grid-points 4 --threads 1", "simulate_fig4_small.csv");
    check_golden("analyze --preset fig5 --t-end 5 --grid-points 6", "analyze_fig5.csv");
}

TEST_CASE("exit codes") {
    CHECK(run_cli("spectrum --preset fig3").status == 0);
    CHECK(run_cli("").status == 2);
    CHECK(run_cli("simulate --preset fig3 --replications 0").status == 2);
    CHECK(run_cli("simulate --preset nope").status == 2);
    CHECK(run_cli("bound --preset fig3").status == 2);
    CHECK(run_cli("analyze --config /nonexistent/config.json").status == 2);
}

TEST_CASE("json output mirrors the tables") {
    const auto r = run_cli("spectrum --preset fig3 --format json");
    REQUIRE(r.status == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["metadata"]["command"] == "spectrum");
    CHECK(doc["metadata"]["config"]["rates"]["lambda_g"] == 19.0);
    CHECK(doc["tables"].size() == 1);
}

TEST_CASE("simulation output does not depend on the thread count") {
    const std::string base = "simulate --preset fig5 --replications 96 --t-end 4 --grid-points 5 --chunk 8";
    const auto a = run_cli(base + " --threads 1");
    const auto b = run_cli(base + " --threads 3");
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("single gamma gives a single bound row") {
    auto c = preset("fig5");
    c.gamma_grid = {10.0};
    c.replications = 4;
    c.t_end = 40.0;
    const auto r = run_command("bound", c);
    const auto& t = r.table("bounds");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.number(0, "gamma") == 10.0);
    CHECK(t.number(0, "best_bound") <= t.number(0, "explicit_bound"));
}

TEST_CASE("analyze reports the closed-system branch") {
    auto c = preset("fig4");
    c.rates.lambda_r = 0.0;
    const auto r = run_command("analyze", c);
    const auto csv = r.table("summary").to_csv();
    CHECK(csv.find("closed system") != std::string::npos);
}
