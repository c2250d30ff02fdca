#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rmt/errors.hpp"
#include "rmt/harness.hpp"

using namespace rmt;
using namespace rmt::harness;
namespace fs = std::filesystem;

namespace {

std::string config_field(const json& raw, const Overrides& ov = {}) {
    try {
        load_manifest(raw, ov);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rmtlab_harness_" + name);
    fs::remove_all(p);
    return p;
}

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) n += !line.empty();
    return n;
}

struct EnvGuard {
    EnvGuard() { unsetenv(workers_env); }
    ~EnvGuard() { unsetenv(workers_env); }
};

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("experiment kinds") {
    const auto& k = experiment_kinds();
    CHECK(k.size() == 8);
    for (const char* name : {"sample", "locallaw", "eth", "que", "gft", "dbm", "matching", "identities"})
        CHECK(std::find(k.begin(), k.end(), name) != k.end());
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("manifest defaults are filled in") {
    EnvGuard g;
    const Manifest m = load_manifest(json{{"experiment", "sample"}});
    CHECK(m.experiment == "sample");
    CHECK(m.seed == 0);
    CHECK(m.workers == 1);
    CHECK(m.out == "results");
    CHECK(m.resolved["ensemble"]["N"] == 200);
    CHECK(m.resolved["ensemble"]["symmetry"] == "real");
    CHECK(m.resolved["config"]["matrices"] == 1);
    CHECK(m.resolved["config"]["bins"] == 40);
    CHECK_FALSE(m.resolved.contains("observable"));
    const Manifest q = load_manifest(json{{"experiment", "que"}});
    CHECK(q.resolved["observable"]["kind"] == "mesoscopic");
    CHECK(q.resolved["config"]["per_matrix"] == 8);
}

TEST_CASE("manifest errors name the offending field") {
    EnvGuard g;
    CHECK(config_field(json::array()) == "");
    CHECK(config_field(json::object()) == "experiment");
    CHECK(config_field(json{{"experiment", "nope"}}) == "experiment");
    CHECK(config_field(json{{"experiment", "sample"}, {"bogus", 1}}) == "bogus");
    CHECK(config_field(json{{"experiment", "sample"}, {"ensemble", {{"N", 1}}}}) == "ensemble.N");
    CHECK(config_field(json{{"experiment", "sample"}, {"ensemble", {{"N", "big"}}}}) == "ensemble.N");
    CHECK(config_field(json{{"experiment", "sample"}, {"ensemble", {{"symmetry", "quaternion"}}}}) == "ensemble.symmetry");
    CHECK(config_field(json{{"experiment", "sample"}, {"ensemble", {{"colour", 1}}}}) == "ensemble.colour");
    CHECK(config_field(json{{"experiment", "sample"}, {"config", {{"matrices", 0}}}}) == "config.matrices");
    CHECK(config_field(json{{"experiment", "sample"}, {"observable", json::object()}}) == "observable");
    CHECK(config_field(json{{"experiment", "sample"}, {"seed", -4}}) == "seed");
    CHECK(config_field(json{{"experiment", "sample"}, {"workers", 0}}) == "workers");
    CHECK(config_field(json{{"experiment", "locallaw"}, {"config", {{"ks", {1, 0}}}}}) == "config.ks[1]");
    CHECK(config_field(json{{"experiment", "identities"}, {"config", {{"z", {{0.0, -1.0}}}}}}) == "config.z[0]");
    CHECK(config_field(json{{"experiment", "matching"}, {"ensemble", {{"N", 41}}}}) == "ensemble.N");
    CHECK(config_field(json{{"experiment", "dbm"}, {"config", {{"mode", "pde"}}}}) == "ensemble.N");
    CHECK(config_field(json{{"experiment", "sample"}, {"ensemble", {{"offdiag", {{"table", {1, 2}}}}}}}) == "ensemble.offdiag.table");
    Overrides ov;
    ov.experiment = "que";
    CHECK(config_field(json{{"experiment", "sample"}}, ov) == "experiment");
    CHECK(config_field(json::object(), ov) == "<accepted>");
}

TEST_CASE("manifest hash ignores workers and out") {
    EnvGuard g;
    const json base{{"experiment", "sample"}, {"ensemble", {{"N", 30}}}, {"seed", 5}};
    const std::string h = load_manifest(base).hash;
    json b = base;
    b["workers"] = 4;
    b["out"] = "elsewhere";
    CHECK(load_manifest(b).hash == h);
    b = base;
    b["seed"] = 6;
    CHECK(load_manifest(b).hash != h);
    b = base;
    b["ensemble"]["N"] = 31;
    CHECK(load_manifest(b).hash != h);
    // an explicit default value resolves to the same manifest
    b = base;
    b["config"] = {{"bins", 40}};
    CHECK(load_manifest(b).hash == h);
}

TEST_CASE("worker count precedence") {
    EnvGuard g;
    const json raw{{"experiment", "sample"}, {"workers", 2}};
    CHECK(load_manifest(raw).workers == 2);
    setenv(workers_env, "3", 1);
    CHECK(load_manifest(raw).workers == 3);
    Overrides ov;
    ov.workers = 5;
    CHECK(load_manifest(raw, ov).workers == 5);
    setenv(workers_env, "many", 1);
    CHECK(config_field(raw) == workers_env);
    setenv(workers_env, "0", 1);
    CHECK(config_field(raw) == workers_env);
}

TEST_CASE("result rows round-trip through JSON") {
    ResultRow r;
    r.manifest_hash = "abc";
    r.experiment = "que";
    r.cell = {{"N", 10}, {"label", "x"}};
    r.statistic = "ks";
    r.value = 0.125;
    r.mc_error = std::nan("");
    r.seed = 0xffffffffffffffffULL;
    r.wall_ms = 3.5;
    const json j = r.to_json();
    CHECK(j["mc_error"].is_null());
    const ResultRow b = ResultRow::from_json(json::parse(j.dump()));
    CHECK(b.manifest_hash == "abc");
    CHECK(b.cell == r.cell);
    CHECK(b.value == 0.125);
    CHECK(std::isnan(b.mc_error));
    CHECK(b.seed == r.seed);
    CHECK(b.wall_ms == 3.5);
}

TEST_CASE("sample experiment is deterministic and worker independent") {
    EnvGuard g;
    json raw{{"experiment", "sample"}, {"ensemble", {{"N", 60}}}, {"config", {{"matrices", 4}, {"bins", 10}}}, {"seed", 11}};
    const RunResult a = execute(load_manifest(raw));
    raw["workers"] = 2;
    const RunResult b = execute(load_manifest(raw));
    REQUIRE(a.rows.size() == 4 * 4 + 10);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].statistic == b.rows[i].statistic);
        CHECK(a.rows[i].value == b.rows[i].value);
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].manifest_hash == b.rows[i].manifest_hash);
    }
    for (const auto& r : a.rows) {
        if (r.statistic == "lambda_max") CHECK(r.value == doctest::Approx(2.0).epsilon(0.25));
        if (r.statistic == "offdiag_second_moment") CHECK(r.value == doctest::Approx(1.0).epsilon(0.1));
    }
    raw["seed"] = 12;
    const RunResult c = execute(load_manifest(raw));
    CHECK(c.rows.front().value != a.rows.front().value);
}

TEST_CASE("persisted output layout") {
    EnvGuard g;
    const fs::path dir = scratch("persist");
    const json raw{{"experiment", "sample"}, {"ensemble", {{"N", 40}}}, {"config", {{"matrices", 2}, {"bins", 8}}},
                   {"out", dir.string()}};
    const Manifest m = load_manifest(raw);
    const RunResult r = run(m);
    CHECK(fs::exists(dir / "manifest.resolved.json"));
    CHECK(fs::exists(dir / "sample.csv"));
    CHECK(count_lines(dir / "results.jsonl") == static_cast<int>(r.rows.size()));
    REQUIRE(fs::exists(dir / "sample_density.dat"));
    {
        std::ifstream in(dir / "sample_density.dat");
        std::string header, line;
        std::getline(in, header);
        CHECK(header.front() == '#');
        int lines = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            double x, y, e;
            CHECK(static_cast<bool>(ss >> x >> y >> e));
            ++lines;
        }
        CHECK(lines == 8);
    }
    // results.jsonl is append-only
    run(m);
    CHECK(count_lines(dir / "results.jsonl") == 2 * static_cast<int>(r.rows.size()));
    const auto rows = read_rows((dir / "results.jsonl").string());
    CHECK(rows.size() == 2 * r.rows.size());
    // summaries rebuilt from stored rows match the ones written at run time
    const Summary s = summarize(std::span<const ResultRow>(rows.data(), r.rows.size()));
    REQUIRE(s.tables.size() == r.summary.tables.size());
    CHECK(s.tables[0].rows == r.summary.tables[0].rows);
    fs::remove_all(dir);
}

TEST_CASE("summaries of empty and malformed input") {
    const Summary s = summarize(std::span<const ResultRow>{});
    CHECK(s.tables.empty());
    REQUIRE(s.warnings.size() == 1);
    const fs::path dir = scratch("malformed");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "results.jsonl");
        out << "{\"not\": \"a row\"}\n";
    }
    CHECK_THROWS_AS(read_rows((dir / "results.jsonl").string()), ConfigError);
    CHECK_THROWS_AS(read_rows((dir / "missing.jsonl").string()), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("CSV fields with commas and quotes are quoted") {
    const fs::path dir = scratch("csv");
    Summary s;
    s.tables.push_back({"t", {"a", "b"}, {{"x,y", "say \"hi\""}}});
    write_summary(s, dir.string());
    std::ifstream in(dir / "t.csv");
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "a,b");
    CHECK(line == "\"x,y\",\"say \"\"hi\"\"\"");
    fs::remove_all(dir);
}

TEST_CASE("matching experiment rows") {
    EnvGuard g;
    const RunResult r = execute(load_manifest(json{{"experiment", "matching"}, {"ensemble", {{"N", 8}}},
                                                   {"config", {{"functions", 3}}}, {"seed", 2}}));
    int counts = 0;
    for (const auto& row : r.rows) {
        if (row.statistic == "matching_count") {
            CHECK(row.value == row.cell["expected"].get<double>());
            ++counts;
        }
        if (row.statistic == "row_sum_max" || row.statistic == "reversibility_max") CHECK(row.value <= 1e-10);
        if (row.statistic == "projection_gap") CHECK(row.value <= 1e-10);
        if (row.statistic == "form_s_max" || row.statistic == "form_a_max") CHECK(row.value <= 1e-10);
    }
    CHECK(counts == 6);
    CHECK(r.failures.empty());
}

TEST_CASE("identities experiment rows") {
    EnvGuard g;
    const RunResult r = execute(load_manifest(json{{"experiment", "identities"},
                                                   {"config", {{"samples", 2}, {"Ns", {20, 40}}}}}));
    int ward = 0, under = 0;
    for (const auto& row : r.rows) {
        if (row.statistic == "ward") ++ward;
        if (row.statistic == "underline") ++under;
        CHECK(row.value <= 1e-8);
    }
    CHECK(ward == 2 * 2 * 4);
    CHECK(under == ward);
    bool has_plot = false;
    for (const auto& p : r.summary.plots) has_plot |= p.name == "identities_ward";
    CHECK(has_plot);
}

}
