#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "rmt/errors.hpp"
#include "rmt/harness.hpp"

namespace h = rmt::harness;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Flags {
    std::string manifest;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out;
    std::string kind;
};

int run_experiment(const std::string& name, const Flags& f, const CLI::App& sub) {
    h::Overrides ov;
    ov.experiment = name;
    if (sub.count("--seed")) ov.seed = f.seed;
    if (sub.count("--workers")) ov.workers = f.workers;
    if (sub.count("--out")) ov.out = f.out;
    const h::Manifest m = f.manifest.empty() ? h::load_manifest(h::json::object(), ov) : h::load_manifest_file(f.manifest, ov);
    const h::RunResult r = h::run(m);
    std::cout << name << ": " << r.rows.size() << " rows, manifest " << m.hash << ", output " << m.out << '\n';
    for (const auto& w : r.summary.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (!r.failures.empty()) {
        for (const auto& x : r.failures) std::cerr << "failed: " << x << '\n';
        return exit_numerical;
    }
    return exit_ok;
}

int run_summarize(const Flags& f) {
    const std::string dir = f.out.empty() ? "results" : f.out;
    const auto path = std::filesystem::path(dir) / "results.jsonl";
    const auto rows = std::filesystem::exists(path) ? h::read_rows(path.string()) : std::vector<h::ResultRow>{};
    const h::Summary s = h::summarize(rows, f.kind);
    h::write_summary(s, dir);
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "summarize: " << rows.size() << " rows, " << s.tables.size() << " tables, " << s.plots.size() << " plot files\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-matrix local-law and eigenvector-statistics laboratory"};
    app.require_subcommand(1);
    Flags f;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& k : h::experiment_kinds()) {
        CLI::App* s = app.add_subcommand(k, "run the " + k + " experiment");
        s->add_option("--manifest", f.manifest, "JSON manifest");
        s->add_option("--seed", f.seed, "master seed (overrides the manifest)");
        s->add_option("--workers", f.workers, "worker threads (overrides RMTLAB_WORKERS and the manifest)")->check(CLI::PositiveNumber);
        s->add_option("--out", f.out, "output directory");
        subs.emplace_back(k, s);
    }
    CLI::App* sum = app.add_subcommand("summarize", "rebuild summary tables and plot data from results.jsonl");
    sum->add_option("--out", f.out, "result directory");
    sum->add_option("--kind", f.kind, "report kind (defaults to the rows' experiment)");
    sum->add_option("--manifest", f.manifest, "ignored; accepted for symmetry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (sum->parsed()) return run_summarize(f);
        for (const auto& [name, s] : subs)
            if (s->parsed()) return run_experiment(name, f, *s);
    } catch (const rmt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const rmt::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const rmt::UsageError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const rmt::DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_ok;
}
