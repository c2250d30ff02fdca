#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace rmt::harness {

using json = nlohmann::json;

const std::vector<std::string>& experiment_kinds();

struct Manifest {
    std::string experiment;
    json resolved;  // every field, defaults filled in
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "results";
    std::string hash;  // FNV-1a of the fields that determine the statistics (not workers or out)
};

struct Overrides {
    std::optional<std::string> experiment;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

// Validates the raw manifest; ConfigError::field() carries the JSON path.
Manifest load_manifest(const json& raw, const Overrides& ov = {});
Manifest load_manifest_file(const std::string& path, const Overrides& ov = {});

std::uint64_t fnv1a(const std::string& s);
std::string fnv1a_hex(const std::string& s);

struct ResultRow {
    std::string manifest_hash;
    std::string experiment;
    json cell = json::object();
    std::string statistic;
    double value = 0.0;
    double mc_error = 0.0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;

    json to_json() const;
    static ResultRow from_json(const json& j);
};

struct SummaryTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct PlotSeries {
    std::string name;  // file stem
    std::string x_label, y_label;
    std::vector<double> x, y, yerr;
};

struct Summary {
    std::vector<SummaryTable> tables;
    std::vector<PlotSeries> plots;
    std::vector<std::string> warnings;
};

struct RunResult {
    std::vector<ResultRow> rows;
    Summary summary;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
};

// Computes without touching the filesystem (trajectory files excepted when requested).
RunResult execute(const Manifest& m);

// execute() followed by persist() into m.out.
RunResult run(const Manifest& m);

// Appends rows to results.jsonl and rewrites the derived files.
void persist(const Manifest& m, const RunResult& r);

// Fixed-schema tables and plot data from stored rows; kind defaults to the rows' experiment.
Summary summarize(std::span<const ResultRow> rows, const std::string& kind = "");

std::vector<ResultRow> read_rows(const std::string& path);
void write_summary(const Summary& s, const std::string& dir);

// Worker count precedence: explicit flag, then this variable, then the manifest.
constexpr const char* workers_env = "RMTLAB_WORKERS";

}  // namespace rmt::harness
