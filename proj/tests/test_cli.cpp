#include "cli_harness.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sstream>
#include <vector>

using cli::count_lines;
using cli::quote;
using cli::run;
using cli::scenario;
using cli::slurp;
using cli::TempDir;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("bound") {
    SUBCASE("scalar") {
        const auto r = run("bound --config " + scenario("bound_scalar.json"));
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.output);
        CHECK(j["identifiable"] == true);
        CHECK(j["trace"].get<double>() == doctest::Approx(1.04).epsilon(1e-12));
    }
    SUBCASE("identity, two dimensions") {
        TempDir d;
        d.write("q.json", R"({"H": [[1,0],[0,1]], "S": 1, "sigma_w": 1})");
        const auto r = run("bound --config " + quote((d.path() / "q.json").string()));
        REQUIRE(r.code == 0);
        CHECK(nlohmann::json::parse(r.output)["trace"].get<double>() == doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("zero budget") {
        TempDir d;
        d.write("q.json", R"({"H": [[1,0],[0,1]], "S": 0, "sigma_w": 0.2})");
        const auto r = run("bound --config " + quote((d.path() / "q.json").string()));
        CHECK(r.code == 2);
        const auto j = nlohmann::json::parse(r.output);
        CHECK(j["identifiable"] == false);
        CHECK(j["trace"].is_null());
    }
    SUBCASE("multi-sensor sum") {
        TempDir d;
        d.write("q.json", R"({"sensors": [{"H": [[1,0]], "S": 1, "sigma_w": 0.2},
                                           {"H": [[0,1]], "S": 1, "sigma_w": 0.2}]})");
        const auto r = run("bound --config " + quote((d.path() / "q.json").string()));
        REQUIRE(r.code == 0);
        CHECK(nlohmann::json::parse(r.output)["trace"].get<double>() == doctest::Approx(2.08).epsilon(1e-12));
    }
}

TEST_CASE("config errors exit 1 and name the field") {
    TempDir d;
    d.write("bad.json", R"({"scenario": "consensus", "graph": "x.json", "budgets": [1], "bogus": 3})");
    const auto unknown = run("run --config " + quote((d.path() / "bad.json").string()) + " --out " + d.arg());
    CHECK(unknown.code == 1);
    CHECK(unknown.output.find("bogus") != std::string::npos);

    d.write("neg.json", R"({"scenario": "consensus", "reps": -4, "graph": {"n": 2, "edges": [[0,1]]}, "budgets": [1]})");
    const auto negative = run("run --config " + quote((d.path() / "neg.json").string()) + " --out " + d.arg());
    CHECK(negative.code == 1);
    CHECK(negative.output.find("reps") != std::string::npos);

    CHECK(run("run --config /nonexistent/file.json").code == 1);
    CHECK(run("bound").code == 1);
    CHECK(run("frobnicate --config x").code == 1);
    CHECK(run("run --config " + scenario("consensus.json") + " --grid 1:1:3 --out " + d.arg()).code == 1);
    CHECK(run("run --config " + scenario("fig1.json") + " --grid 3:1:1 --out " + d.arg()).code == 1);
}

TEST_CASE("threads: flag and environment fallback") {
    TempDir d;
    const std::string base = "run --config " + scenario("consensus.json") + " --reps 100 --out " + d.arg();
    CHECK(run(base, "PPCR_THREADS=abc").code == 1);
    CHECK(run(base, "PPCR_THREADS=0").code == 1);
    CHECK(run(base + " --threads 0").code == 1);
    CHECK(run(base, "PPCR_THREADS=2").code == 0);
}

TEST_CASE("unwritable output directory exits 1") {
    TempDir d;
    d.write("file", "x");
    const auto r = run("run --config " + scenario("consensus.json") + " --reps 50 --out " +
                       quote((d.path() / "file" / "sub").string()));
    CHECK(r.code == 1);
}

TEST_CASE("check") {
    CHECK(run("check --config " + scenario("fig3.json") + " --samples 2000").code == 0);
    const auto degenerate = run("check --config " + scenario("check_degenerate.json"));
    CHECK(degenerate.code == 2);
    CHECK(degenerate.output.find("identifiability: FAIL") != std::string::npos);
    const auto bad = run("check --config " + scenario("check_inadmissible.json") + " --samples 20000");
    CHECK(bad.code == 3);
    CHECK(bad.output.find("squared-output") != std::string::npos);
    CHECK(bad.output.find("FAIL") != std::string::npos);
}

TEST_CASE("consensus run has a constant bound column") {
    TempDir d;
    const auto r = run("run --config " + scenario("consensus.json") + " --reps 2000 --out " + d.arg());
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(slurp(d.path() / "consensus.csv"));
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == std::vector<std::string>{"reps", "variance", "stderr", "bound"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][3]) == 0.125);
    CHECK(rows.back()[0] == "2000");
}

TEST_CASE("fig1 with 50 reps gives 600 rows") {
    TempDir d;
    const auto r = run("run --config " + scenario("fig1.json") + " --reps 50 --out " + d.arg() + " --svg");
    REQUIRE(r.code == 0);
    const std::string csv = slurp(d.path() / "fig1.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "mechanism,s,mse,stderr,ppcr_trace");
    CHECK(count_lines(csv) == 601);
    CHECK(std::filesystem::exists(d.path() / "fig1.svg"));
}

TEST_CASE("offline and online tables") {
    TempDir d;
    REQUIRE(run("run --config " + scenario("fig3.json") + " --reps 20 --out " + d.arg()).code == 0);
    for (const char* alg : {"gaussian", "laplace-data", "laplace-output"}) {
        const std::string csv = slurp(d.path() / (std::string("fig3_") + alg + ".csv"));
        CHECK(csv.substr(0, csv.find('\n')) == "k,sensor,mse,stderr,bound");
        CHECK(csv.find(",mean,") != std::string::npos);
    }
}

TEST_CASE("same seed, same bytes") {
    TempDir a, b, c;
    const std::string base = "run --config " + scenario("fig1.json") + " --reps 40 --grid 0.5:0.5:2 --seed 7 --out ";
    REQUIRE(run(base + a.arg()).code == 0);
    REQUIRE(run(base + b.arg() + " --threads 3").code == 0);
    REQUIRE(run(base + c.arg(), "PPCR_THREADS=2").code == 0);
    CHECK(slurp(a.path() / "fig1.csv") == slurp(b.path() / "fig1.csv"));
    CHECK(slurp(a.path() / "fig1.csv") == slurp(c.path() / "fig1.csv"));
    REQUIRE(run("run --config " + scenario("fig1.json") + " --reps 40 --grid 0.5:0.5:2 --seed 8 --out " + c.arg()).code == 0);
    CHECK(slurp(a.path() / "fig1.csv") != slurp(c.path() / "fig1.csv"));
}

TEST_CASE("assert-dominance passes on an honest run") {
    TempDir d;
    CHECK(run("run --config " + scenario("consensus.json") + " --reps 500 --assert-dominance --out " + d.arg()).code == 0);
}
