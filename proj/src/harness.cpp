#include "rmt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "rmt/config_space.hpp"
#include "rmt/dbm.hpp"
#include "rmt/eigensystem.hpp"
#include "rmt/eigenvector_stats.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/local_law.hpp"
#include "rmt/matching.hpp"
#include "rmt/moment_flow.hpp"
#include "rmt/observables.hpp"
#include "rmt/parallel.hpp"
#include "rmt/random.hpp"
#include "rmt/resolvent.hpp"
#include "rmt/spectral.hpp"
#include "rmt/stats.hpp"
#include "rmt/trajectory_io.hpp"

namespace fs = std::filesystem;

namespace rmt::harness {

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"sample", "locallaw", "eth", "que", "gft", "dbm", "matching", "identities"};
    return k;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a_hex(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

// ---------------------------------------------------------------- validation

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object, recording every value (given or default) into `out`.
class Block {
public:
    Block(const json* raw, std::string path, json& out) : raw_(raw), path_(std::move(path)), out_(out) {
        if (raw_ && !raw_->is_object()) throw ConfigError(path_, "must be an object");
        out_ = json::object();
    }

    bool has(const std::string& key) const { return raw_ && raw_->contains(key); }

    long long integer(const std::string& key, long long def, long long lo, long long hi) {
        long long v = def;
        if (const json* j = take(key)) {
            if (!j->is_number_integer()) throw ConfigError(join(path_, key), "must be an integer");
            v = j->get<long long>();
        }
        if (v < lo || v > hi) throw ConfigError(join(path_, key), "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out_[key] = v;
        return v;
    }

    double real(const std::string& key, double def, double lo, double hi) {
        double v = def;
        if (const json* j = take(key)) {
            if (!j->is_number()) throw ConfigError(join(path_, key), "must be a number");
            v = j->get<double>();
        }
        if (!(v >= lo && v <= hi)) throw ConfigError(join(path_, key), "out of range");
        out_[key] = v;
        return v;
    }

    bool boolean(const std::string& key, bool def) {
        bool v = def;
        if (const json* j = take(key)) {
            if (!j->is_boolean()) throw ConfigError(join(path_, key), "must be a boolean");
            v = j->get<bool>();
        }
        out_[key] = v;
        return v;
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& options) {
        std::string v = def;
        if (const json* j = take(key)) {
            if (!j->is_string()) throw ConfigError(join(path_, key), "must be a string");
            v = j->get<std::string>();
        }
        if (std::find(options.begin(), options.end(), v) == options.end())
            throw ConfigError(join(path_, key), "unknown value '" + v + "'");
        out_[key] = v;
        return v;
    }

    std::vector<long long> int_list(const std::string& key, std::vector<long long> def, long long lo, long long hi, bool nonempty = true) {
        std::vector<long long> v = std::move(def);
        if (const json* j = take(key)) {
            if (!j->is_array()) throw ConfigError(join(path_, key), "must be an array of integers");
            v.clear();
            for (std::size_t i = 0; i < j->size(); ++i) {
                if (!(*j)[i].is_number_integer()) throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "must be an integer");
                v.push_back((*j)[i].get<long long>());
            }
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] < lo || v[i] > hi) throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "out of range");
        if (nonempty && v.empty()) throw ConfigError(join(path_, key), "must not be empty");
        out_[key] = v;
        return v;
    }

    std::vector<double> real_list(const std::string& key, std::vector<double> def, double lo, double hi, bool nonempty = true) {
        std::vector<double> v = std::move(def);
        if (const json* j = take(key)) {
            if (!j->is_array()) throw ConfigError(join(path_, key), "must be an array of numbers");
            v.clear();
            for (std::size_t i = 0; i < j->size(); ++i) {
                if (!(*j)[i].is_number()) throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "must be a number");
                v.push_back((*j)[i].get<double>());
            }
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!(v[i] >= lo && v[i] <= hi)) throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "out of range");
        if (nonempty && v.empty()) throw ConfigError(join(path_, key), "must not be empty");
        out_[key] = v;
        return v;
    }

    std::vector<std::pair<double, double>> complex_list(const std::string& key, std::vector<std::pair<double, double>> def) {
        auto v = std::move(def);
        if (const json* j = take(key)) {
            if (!j->is_array() || j->empty()) throw ConfigError(join(path_, key), "must be a non-empty array of [re, im] pairs");
            v.clear();
            for (std::size_t i = 0; i < j->size(); ++i) {
                const json& p = (*j)[i];
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                    throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "must be [re, im]");
                if (!(p[1].get<double>() > 0.0)) throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "needs Im z > 0");
                v.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        }
        json arr = json::array();
        for (auto [re, im] : v) arr.push_back({re, im});
        out_[key] = arr;
        return v;
    }

    // A distribution given by name or as {"table": [[value, weight], ...]}.
    json distribution(const std::string& key, const json& def) {
        json v = def;
        if (const json* j = take(key)) v = *j;
        const std::string p = join(path_, key);
        try {
            if (v.is_string()) {
                ScalarDistribution::named(v.get<std::string>());
            } else if (v.is_object() && v.size() == 1 && v.contains("table") && v["table"].is_array()) {
                std::vector<std::pair<double, double>> atoms;
                for (const auto& a : v["table"]) {
                    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                        throw ConfigError(p + ".table", "entries must be [value, weight]");
                    atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
                }
                ScalarDistribution::from_table(atoms);
            } else {
                throw ConfigError(p, "must be a distribution name or {\"table\": [...]}");
            }
        } catch (const ConfigError& e) {
            if (e.field().rfind(p, 0) == 0) throw;
            throw ConfigError(p, e.what());
        }
        out_[key] = v;
        return v;
    }

    void finish() const {
        if (!raw_) return;
        for (auto it = raw_->begin(); it != raw_->end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown field");
    }

private:
    const json* take(const std::string& key) {
        used_.insert(key);
        if (!raw_ || !raw_->contains(key)) return nullptr;
        return &(*raw_)[key];
    }

    const json* raw_;
    std::string path_;
    json& out_;
    std::set<std::string> used_;
};

ScalarDistribution distribution_from(const json& j) {
    if (j.is_string()) return ScalarDistribution::named(j.get<std::string>());
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : j["table"]) atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    return ScalarDistribution::from_table(atoms);
}

const json* child(const json& raw, const std::string& key) { return raw.contains(key) ? &raw[key] : nullptr; }

void resolve_ensemble(const json& raw, json& out) {
    Block b(child(raw, "ensemble"), "ensemble", out);
    b.integer("N", 200, 2, 20000);
    b.choice("symmetry", "real", {"real", "complex"});
    const json off = b.distribution("offdiag", "gaussian");
    b.distribution("diag", off);
    b.finish();
}

void resolve_observable(const json& raw, json& out) {
    Block b(child(raw, "observable"), "observable", out);
    const std::string kind = b.choice("kind", "mesoscopic", {"mesoscopic", "projector", "identity"});
    if (kind == "mesoscopic") b.real_list("alphas", {1.0}, 0.0, 1.0);
    if (kind == "projector") b.real("fraction", 0.5, 0.0, 1.0);
    b.finish();
}

void resolve_config(const std::string& kind, const json& raw, json& out, int N) {
    Block b(child(raw, "config"), "config", out);
    if (kind == "sample") {
        b.integer("matrices", 1, 1, 100000);
        b.integer("bins", 40, 2, 10000);
    } else if (kind == "locallaw") {
        b.int_list("Ns", {N}, 2, 20000);
        const auto etas = b.real_list("etas", {}, 1e-12, 1e6, false);
        const auto ex = b.real_list("eta_exponents", etas.empty() ? std::vector<double>{0.2, 0.35, 0.5, 0.65, 0.8} : std::vector<double>{}, 0.0, 1.0, false);
        if (etas.empty() && ex.empty()) throw ConfigError("config.etas", "give etas or eta_exponents");
        b.real_list("energies", {0.0}, -1e6, 1e6);
        b.int_list("ks", {1}, 1, 8);
        b.boolean("include_identity", false);
        b.integer("samples", 10, 1, 1000000);
        b.choice("regime", "bulk", {"bulk", "far"});
        b.choice("mode", "averaged", {"averaged", "isotropic"});
        b.real("epsilon", 0.1, 0.0, 1.0);
    } else if (kind == "eth") {
        b.integer("runs", 50, 1, 1000000);
        b.real("delta", 0.1, 0.0, 0.49);
        b.real("threshold_exponent", 0.2, 0.0, 1.0);
    } else if (kind == "que") {
        b.integer("n_samples", 2000, 1, 100000000);
        b.integer("per_matrix", 8, 1, 100000);
        b.real("delta", 0.1, 0.0, 0.49);
        b.real("rank_exponent", 0.99, 0.0, 1.0);
        b.boolean("rank2_control", false);
    } else if (kind == "gft") {
        b.distribution("compare", "rademacher");
        b.int_list("Ns", {N}, 2, 20000);
        b.integer("matrices", 100, 1, 1000000);
        b.integer("per_matrix", 0, 0, 100000);
        b.real("delta", 0.1, 0.0, 0.49);
        b.int_list("moments", {2, 4}, 1, 12);
    } else if (kind == "dbm") {
        const std::string mode = b.choice("mode", "rigidity", {"rigidity", "flucque", "pde"});
        b.choice("method", "matrix-diagonalize", {"matrix-diagonalize", "sde-integrate"});
        if (mode == "rigidity") {
            b.real("T", 0.1, 0.0, 1e3);
            b.integer("steps", 10, 1, 1000000);
            b.integer("runs", 10, 1, 1000000);
            b.real("xi", 0.3, 0.0, 2.0);
            b.boolean("save_trajectories", false);
        } else if (mode == "flucque") {
            b.integer("n", 2, 1, max_enumerated_particles);
            b.real("T_exponent", 0.5, 0.0, 1.0);
            b.integer("steps", 10, 1, 1000000);
            b.integer("paths", 20, 1, 100000);
            b.integer("max_attempts", 200, 1, 1000000);
            b.real("xi", 0.5, 0.0, 2.0);
            b.real("delta", 0.1, 0.0, 0.49);
            b.integer("stride", 1, 1, 100000);
        } else {
            if (N > 40) throw ConfigError("ensemble.N", "the PDE check enumerates configurations; N <= 40");
            b.integer("n", 1, 1, 2);
            b.real("T", 0.06, 1e-9, 10.0);
            b.integer("slices", 600, 2, 10000000);
            b.integer("grid_stride", 20, 1, 10000000);
            b.integer("replicas", 1000, 0, 100000000);
            b.real("c0", 0.01, 1e-9, 10.0);
            b.real("rate_scale", 0.5, 0.0, 10.0);
            b.real("pass_sigma", 2.0, 0.0, 100.0);
            b.int_list("sites", {}, 0, N - 1, false);
        }
    } else if (kind == "matching") {
        if (N > 40) throw ConfigError("ensemble.N", "configuration spaces are enumerated for N <= 40");
        b.integer("n", 2, 1, 2);
        b.integer("ell", 3, 0, 40);
        b.real("delta", 0.1, 0.0, 0.49);
        b.real("eta", 0.1, 1e-9, 1e6);
        b.integer("functions", 20, 1, 100000);
    } else if (kind == "identities") {
        b.integer("samples", 10, 1, 1000000);
        b.int_list("Ns", {50, 100, 200}, 2, 20000);
        b.complex_list("z", {{0.0, 1.0}, {0.5, 0.1}, {-1.5, 0.05}, {3.0, 1.0}});
    }
    b.finish();
}

bool uses_observable(const std::string& kind, const json& config) {
    if (kind == "eth" || kind == "que" || kind == "gft" || kind == "locallaw") return true;
    if (kind == "dbm") return config.value("mode", "rigidity") != "rigidity";
    return false;
}

}  // namespace

Manifest load_manifest(const json& raw_in, const Overrides& ov) {
    const json raw = raw_in.is_null() ? json::object() : raw_in;
    if (!raw.is_object()) throw ConfigError("", "manifest must be a JSON object");
    static const std::set<std::string> top{"experiment", "ensemble", "observable", "config", "seed", "workers", "out"};
    for (auto it = raw.begin(); it != raw.end(); ++it)
        if (!top.count(it.key())) throw ConfigError(it.key(), "unknown field");

    Manifest m;
    if (raw.contains("experiment")) {
        if (!raw["experiment"].is_string()) throw ConfigError("experiment", "must be a string");
        m.experiment = raw["experiment"].get<std::string>();
        const auto& k = experiment_kinds();
        if (std::find(k.begin(), k.end(), m.experiment) == k.end())
            throw ConfigError("experiment", "unknown experiment kind '" + m.experiment + "'");
        if (ov.experiment && *ov.experiment != m.experiment)
            throw ConfigError("experiment", "manifest names '" + m.experiment + "' but the command is '" + *ov.experiment + "'");
    } else if (ov.experiment) {
        m.experiment = *ov.experiment;
    } else {
        throw ConfigError("experiment", "missing");
    }

    if (raw.contains("seed") && !(raw["seed"].is_number_unsigned() ||
                                  (raw["seed"].is_number_integer() && raw["seed"].get<long long>() >= 0)))
        throw ConfigError("seed", "must be a non-negative integer");
    m.seed = ov.seed ? *ov.seed : (raw.contains("seed") ? raw["seed"].get<std::uint64_t>() : 0);

    if (raw.contains("workers") && !(raw["workers"].is_number_integer() && raw["workers"].get<long long>() >= 1))
        throw ConfigError("workers", "must be a positive integer");
    m.workers = raw.value("workers", 1);
    if (const char* env = std::getenv(workers_env); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096) throw ConfigError(workers_env, "must be a positive integer");
        m.workers = static_cast<int>(v);
    }
    if (ov.workers) {
        if (*ov.workers < 1) throw ConfigError("workers", "must be a positive integer");
        m.workers = *ov.workers;
    }
    if (raw.contains("out") && !raw["out"].is_string()) throw ConfigError("out", "must be a string");
    m.out = ov.out ? *ov.out : raw.value("out", std::string("results"));

    json& r = m.resolved;
    r = json::object();
    r["experiment"] = m.experiment;
    r["seed"] = m.seed;
    resolve_ensemble(raw, r["ensemble"]);
    const int N = r["ensemble"]["N"].get<int>();
    resolve_config(m.experiment, raw, r["config"], N);
    if (uses_observable(m.experiment, r["config"])) {
        resolve_observable(raw, r["observable"]);
        if (m.experiment == "locallaw" && r["observable"]["kind"] != "mesoscopic")
            throw ConfigError("observable.kind", "the local-law sweep uses mesoscopic observables (set config.include_identity for A = I)");
    } else if (raw.contains("observable")) {
        throw ConfigError("observable", "not used by experiment '" + m.experiment + "'");
    }
    m.hash = fnv1a_hex(r.dump());
    r["workers"] = m.workers;
    r["out"] = m.out;
    return m;
}

Manifest load_manifest_file(const std::string& path, const Overrides& ov) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest", "cannot open '" + path + "'");
    json raw;
    try {
        in >> raw;
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest", std::string("invalid JSON: ") + e.what());
    }
    return load_manifest(raw, ov);
}

// ---------------------------------------------------------------- rows

json ResultRow::to_json() const {
    json j;
    j["manifest_hash"] = manifest_hash;
    j["experiment"] = experiment;
    j["cell"] = cell;
    j["statistic"] = statistic;
    j["value"] = std::isfinite(value) ? json(value) : json(nullptr);
    j["mc_error"] = std::isfinite(mc_error) ? json(mc_error) : json(nullptr);
    j["seed"] = seed;
    j["wall_ms"] = wall_ms;
    return j;
}

ResultRow ResultRow::from_json(const json& j) {
    ResultRow r;
    r.manifest_hash = j.at("manifest_hash").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.cell = j.at("cell");
    r.statistic = j.at("statistic").get<std::string>();
    r.value = j.at("value").is_null() ? std::nan("") : j.at("value").get<double>();
    r.mc_error = j.at("mc_error").is_null() ? std::nan("") : j.at("mc_error").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
}

std::vector<ResultRow> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("out", "cannot open '" + path + "'");
    std::vector<ResultRow> rows;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            rows.push_back(ResultRow::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(n), e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------- execution

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Context {
    const Manifest& m;
    const json& cfg;
    RunResult& out;

    ResultRow row(json cell, std::string stat, double value, double err, std::uint64_t seed, double ms) const {
        ResultRow r;
        r.manifest_hash = m.hash;
        r.experiment = m.experiment;
        r.cell = std::move(cell);
        r.statistic = std::move(stat);
        r.value = value;
        r.mc_error = err;
        r.seed = seed;
        r.wall_ms = ms;
        return r;
    }
    void push(json cell, std::string stat, double value, double err, std::uint64_t seed, double ms) {
        out.rows.push_back(row(std::move(cell), std::move(stat), value, err, seed, ms));
    }
};

EnsembleSpec ensemble_from(const json& e, int N, std::uint64_t seed) {
    EnsembleSpec s;
    s.N = N;
    s.symmetry = e["symmetry"] == "complex" ? Symmetry::Complex : Symmetry::Real;
    s.offdiag = distribution_from(e["offdiag"]);
    s.diag = distribution_from(e["diag"]);
    s.seed = seed;
    return s;
}

struct LabeledObservable {
    std::string label;
    std::optional<double> alpha;
    Observable obs;
};

std::vector<LabeledObservable> observables_for(const json& o, int N, std::uint64_t seed) {
    std::vector<LabeledObservable> v;
    const std::string kind = o["kind"];
    if (kind == "mesoscopic") {
        const auto alphas = o["alphas"].get<std::vector<double>>();
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "alpha=%g", alphas[ai]);
            v.push_back({buf, alphas[ai], make_alpha_mesoscopic(N, alphas[ai], derive_seed(seed, 0xa1fa, N * 64ULL + ai))});
        }
    } else if (kind == "projector") {
        const int k = static_cast<int>(std::floor(o["fraction"].get<double>() * N));
        std::vector<int> S(k);
        for (int i = 0; i < k; ++i) S[i] = i;
        v.push_back({"projector", std::nullopt, coordinate_projector(N, S)});
    } else {
        v.push_back({"identity", std::nullopt, identity_observable(N)});
    }
    return v;
}

json obs_cell(const LabeledObservable& o) {
    json c;
    c["observable"] = o.label;
    c["alpha"] = o.alpha ? json(*o.alpha) : json(nullptr);
    c["alpha_effective"] = o.obs.alpha() ? json(*o.obs.alpha()) : json(nullptr);
    return c;
}

void run_sample(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    const int N = e["N"];
    const int M = cx.cfg["matrices"];
    const int bins = cx.cfg["bins"];
    std::vector<RealVector> evs(M);
    std::vector<double> second(M), ms(M);
    parallel_for(M, cx.m.workers, [&](int k) {
        const auto t0 = Clock::now();
        const WignerSample w = sample_wigner(ensemble_from(e, N, derive_seed(cx.m.seed, 0x5a, k)));
        evs[k] = eigenvalues_only(w);
        second[k] = offdiag_second_moment(w);
        ms[k] = ms_since(t0);
    });
    std::vector<double> pooled;
    for (int k = 0; k < M; ++k) {
        json c{{"matrix", k}, {"N", N}};
        const std::uint64_t s = derive_seed(cx.m.seed, 0x5a, k);
        std::vector<double> l(evs[k].data(), evs[k].data() + N);
        cx.push(c, "lambda_min", l.front(), 0.0, s, ms[k]);
        cx.push(c, "lambda_max", l.back(), 0.0, s, ms[k]);
        cx.push(c, "offdiag_second_moment", second[k] * N, 0.0, s, ms[k]);
        cx.push(c, "ks_semicircle", ks_distance(l, [](double x) { return semicircle_cdf(x); }), 0.0, s, ms[k]);
        pooled.insert(pooled.end(), l.begin(), l.end());
    }
    const double lo = -2.5, hi = 2.5, w = (hi - lo) / bins;
    std::vector<double> count(bins, 0.0);
    for (double x : pooled) {
        const int b = static_cast<int>(std::floor((x - lo) / w));
        if (b >= 0 && b < bins) count[b] += 1.0;
    }
    const double n = static_cast<double>(pooled.size());
    for (int b = 0; b < bins; ++b) {
        const double x = lo + (b + 0.5) * w;
        cx.push(json{{"x", x}, {"semicircle", semicircle_density(x)}}, "density", count[b] / (n * w),
                std::sqrt(count[b]) / (n * w), cx.m.seed, 0.0);
    }
}

void run_locallaw(Context& cx) {
    const auto& c = cx.cfg;
    SweepConfig sc;
    for (long long n : c["Ns"].get<std::vector<long long>>()) sc.Ns.push_back(static_cast<int>(n));
    sc.etas = c["etas"].get<std::vector<double>>();
    sc.eta_exponents = c["eta_exponents"].get<std::vector<double>>();
    sc.energies = c["energies"].get<std::vector<double>>();
    sc.ks.clear();
    for (long long k : c["ks"].get<std::vector<long long>>()) sc.ks.push_back(static_cast<int>(k));
    sc.alphas = cx.m.resolved["observable"]["alphas"].get<std::vector<double>>();
    sc.include_identity = c["include_identity"];
    sc.samples_per_cell = c["samples"];
    sc.regime = c["regime"] == "far" ? Regime::Far : Regime::Bulk;
    sc.mode = c["mode"] == "isotropic" ? ChainMode::Isotropic : ChainMode::Averaged;
    sc.epsilon = c["epsilon"];
    sc.ensemble = ensemble_from(cx.m.resolved["ensemble"], 2, 0);
    sc.seed = cx.m.seed;
    sc.workers = cx.m.workers;
    const auto t0 = Clock::now();
    const auto recs = run_error_sweep(sc);
    const double per = recs.empty() ? 0.0 : ms_since(t0) / static_cast<double>(recs.size());
    for (const auto& r : recs) {
        json cell{{"N", r.N}, {"E", r.E}, {"eta", r.eta}, {"k", r.k},
                  {"alpha", r.alpha ? json(*r.alpha) : json(nullptr)}, {"alpha_effective", r.alpha_effective},
                  {"mode", r.mode}, {"vector_kind", r.vector_kind}, {"regime", r.regime == Regime::Far ? "far" : "bulk"},
                  {"sample", r.sample}, {"psi", r.psi}, {"prediction", r.prediction}, {"ratio", r.ratio},
                  {"split_prediction", r.split_prediction}, {"opnorm_prediction", r.opnorm_prediction},
                  {"ratio_opnorm", r.ratio_opnorm}, {"skipped", r.skipped}, {"warning", r.warning}};
        cx.push(cell, r.skipped ? "skipped" : "error", r.skipped ? 0.0 : r.error, 0.0, r.seed, per);
        if (!r.warning.empty() && r.skipped) cx.out.warnings.push_back(r.warning);
    }
}

void run_eth(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    const int N = e["N"];
    const int runs = cx.cfg["runs"];
    const double delta = cx.cfg["delta"];
    const auto obs = observables_for(cx.m.resolved["observable"], N, cx.m.seed);
    std::vector<std::vector<double>> val(runs, std::vector<double>(obs.size()));
    std::vector<double> ms(runs);
    std::vector<std::string> err(runs);
    if (cx.m.workers > 1) set_blas_threads(1);
    parallel_for(runs, cx.m.workers, [&](int r) {
        const auto t0 = Clock::now();
        try {
            const EigenSystem eig = eigendecompose(sample_wigner(ensemble_from(e, N, derive_seed(cx.m.seed, 0xe7, r))));
            for (std::size_t o = 0; o < obs.size(); ++o) val[r][o] = eth_statistic(overlap_matrix(eig, obs[o].obs, delta), delta);
        } catch (const NumericalError& ex) {
            err[r] = ex.what();
        }
        ms[r] = ms_since(t0);
    });
    for (int r = 0; r < runs; ++r) {
        if (!err[r].empty()) {
            cx.out.failures.push_back("run " + std::to_string(r) + ": " + err[r]);
            continue;
        }
        for (std::size_t o = 0; o < obs.size(); ++o) {
            json c = obs_cell(obs[o]);
            c["N"] = N;
            c["run"] = r;
            c["delta"] = delta;
            c["threshold"] = std::pow(static_cast<double>(N), cx.cfg["threshold_exponent"].get<double>());
            cx.push(c, "eth", val[r][o], 0.0, derive_seed(cx.m.seed, 0xe7, r), ms[r]);
        }
    }
}

void run_que(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    const int N = e["N"];
    auto obs = observables_for(cx.m.resolved["observable"], N, cx.m.seed);
    if (cx.cfg["rank2_control"].get<bool>()) {
        const double a2 = std::log(2.0) / std::log(static_cast<double>(N));
        obs.push_back({"rank2-control", a2, make_alpha_mesoscopic(N, a2, derive_seed(cx.m.seed, 0x2a2))});
    }
    QueConfig qc;
    qc.delta = cx.cfg["delta"];
    qc.n_samples = cx.cfg["n_samples"];
    qc.per_matrix = cx.cfg["per_matrix"];
    qc.rank_exponent = cx.cfg["rank_exponent"];
    qc.workers = cx.m.workers;
    std::vector<const Observable*> ptrs;
    for (const auto& o : obs) ptrs.push_back(&o.obs);
    const EnsembleSpec spec = ensemble_from(e, N, cx.m.seed);
    const auto t0 = Clock::now();
    const auto samples = que_samples(spec, ptrs, qc);
    const double ms = ms_since(t0);
    // Exact Haar sphere variance of the normalized overlap.
    const double target_var = spec.symmetry == Symmetry::Real ? N / (N + 2.0) : N / (N + 1.0);
    for (std::size_t o = 0; o < obs.size(); ++o) {
        const CltReport rep = normality_tests(samples[o].values, target_var);
        json c = obs_cell(obs[o]);
        c["N"] = N;
        c["count"] = rep.count;
        c["matrices"] = samples[o].matrices;
        c["pooling"] = samples[o].pooling_policy;
        c["effective_rank_ok"] = samples[o].effective_rank_ok;
        for (const auto& mr : rep.moments) {
            json cm = c;
            cm["order"] = mr.order;
            cm["target"] = mr.target;
            cx.push(cm, "moment", mr.value, mr.mc_error, spec.seed, ms);
        }
        json ck = c;
        ck["critical_95"] = rep.ks_critical;
        cx.push(ck, "ks", rep.ks, 0.0, spec.seed, ms);
        json cv = c;
        cv["target_variance"] = rep.target_variance;
        cv["variance"] = rep.variance;
        cx.push(cv, "variance_ratio", rep.variance_ratio, 0.0, spec.seed, ms);
    }
}

void run_gft(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    ComparisonConfig cc;
    cc.delta = cx.cfg["delta"];
    cc.matrices = cx.cfg["matrices"];
    cc.per_matrix = cx.cfg["per_matrix"];
    cc.workers = cx.m.workers;
    std::vector<int> moments;
    for (long long k : cx.cfg["moments"].get<std::vector<long long>>()) moments.push_back(static_cast<int>(k));
    for (long long Nl : cx.cfg["Ns"].get<std::vector<long long>>()) {
        const int N = static_cast<int>(Nl);
        const auto obs = observables_for(cx.m.resolved["observable"], N, cx.m.seed);
        EnsembleSpec a = ensemble_from(e, N, derive_seed(cx.m.seed, 0x6a, N));
        EnsembleSpec b = a;
        b.offdiag = distribution_from(cx.cfg["compare"]);
        b.diag = b.offdiag;
        b.seed = derive_seed(cx.m.seed, 0x6b, N);
        for (const auto& o : obs) {
            const auto t0 = Clock::now();
            const auto rows = two_ensemble_comparison(a, b, o.obs, moments, cc);
            const double ms = ms_since(t0);
            for (const auto& r : rows) {
                json c = obs_cell(o);
                c["N"] = N;
                c["moment"] = r.moment;
                c["ensemble_a"] = a.offdiag.name();
                c["ensemble_b"] = b.offdiag.name();
                c["mean_a"] = r.mean_a;
                c["err_a"] = r.err_a;
                c["mean_b"] = r.mean_b;
                c["err_b"] = r.err_b;
                cx.push(c, "moment_difference", r.difference, r.error, a.seed, ms);
            }
        }
    }
}

void run_dbm(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    const auto& c = cx.cfg;
    const int N = e["N"];
    const std::string mode = c["mode"];
    const DbmMethod method = dbm_method_from_string(c["method"]);
    if (e["symmetry"] != "real") throw ConfigError("ensemble.symmetry", "DBM experiments use the real class");

    if (mode == "rigidity") {
        const int runs = c["runs"];
        const double T = c["T"], xi = c["xi"];
        const int steps = c["steps"];
        const bool save = c["save_trajectories"];
        if (save) fs::create_directories(fs::path(cx.m.out) / "trajectories");
        for (int r = 0; r < runs; ++r) {
            const auto t0 = Clock::now();
            const std::uint64_t s0 = derive_seed(cx.m.seed, 0xd1, r), s1 = derive_seed(cx.m.seed, 0xd2, r);
            try {
                const DbmTrajectory tr = simulate_trajectory(sample_wigner(ensemble_from(e, N, s0)), T, steps, method, s1);
                const RigidityResult rr = rigidity_check(tr, xi);
                if (save) write_trajectory((fs::path(cx.m.out) / "trajectories" / ("run_" + std::to_string(r) + ".rmtdbm")).string(), tr);
                json cell{{"N", N}, {"run", r}, {"T", T}, {"xi", xi}, {"pass", rr.pass}, {"threshold", rr.threshold},
                          {"worst_index", rr.worst_index}, {"worst_time", rr.worst_time}, {"method", to_string(method)},
                          {"matching_violations", tr.diagnostics.matching_violations},
                          {"weyl_violations", tr.diagnostics.weyl_violations},
                          {"ordering_violations", tr.diagnostics.ordering_violations}};
                cx.push(cell, "rigidity", rr.worst, 0.0, s1, ms_since(t0));
            } catch (const NumericalError& ex) {
                cx.out.failures.push_back("run " + std::to_string(r) + ": " + ex.what());
            }
        }
        return;
    }

    const auto obs = observables_for(cx.m.resolved["observable"], N, cx.m.seed);
    if (mode == "flucque") {
        FlucqueConfig fc;
        fc.paths = c["paths"];
        fc.max_attempts = c["max_attempts"];
        fc.steps = c["steps"];
        fc.xi = c["xi"];
        fc.delta = c["delta"];
        fc.stride = c["stride"];
        fc.method = method;
        fc.seed = cx.m.seed;
        const int n = c["n"];
        const double T = std::pow(static_cast<double>(N), -1.0 + c["T_exponent"].get<double>());
        for (const auto& o : obs) {
            const auto t0 = Clock::now();
            try {
                const FlucqueReport rep = flucque_experiment(ensemble_from(e, N, cx.m.seed), o.obs, n, T, fc);
                json cell = obs_cell(o);
                cell.update(json{{"N", N}, {"n", n}, {"T", T}, {"epsilon", rep.epsilon}, {"paths_used", rep.paths_used},
                                 {"paths_rejected", rep.paths_rejected}, {"configs", rep.configs}, {"target", rep.target},
                                 {"odd_n", rep.odd_n}});
                const double ms = ms_since(t0);
                cx.push(cell, "f_pooled", rep.pooled_f, rep.pooled_error, cx.m.seed, ms);
                cx.push(cell, "sup_deviation", rep.sup_deviation, 0.0, cx.m.seed, ms);
            } catch (const NumericalError& ex) {
                cx.out.failures.push_back(o.label + ": " + ex.what());
            }
        }
        return;
    }

    // pde
    const int n = c["n"];
    const int slices = c["slices"], stride = c["grid_stride"];
    const double T = c["T"];
    const std::uint64_t s0 = derive_seed(cx.m.seed, 0xde, 0), s1 = derive_seed(cx.m.seed, 0xde, 1);
    const WignerSample w0 = sample_wigner(ensemble_from(e, N, s0));
    const DbmTrajectory path = simulate_trajectory(w0, T, slices, method, s1);
    const RealMatrix U0 = eigendecompose(w0).real_vectors();
    std::vector<int> sites;
    for (long long s : c["sites"].get<std::vector<long long>>()) sites.push_back(static_cast<int>(s));
    if (sites.empty()) {
        const auto [lo, hi] = bulk_window(N, 0.1);
        for (int i = lo; i <= hi; ++i) sites.push_back(i);
    }
    std::vector<ParticleConfig> etas;
    for (int s : sites) etas.push_back(ParticleConfig::single_site(N, s, n));
    PdeCheckConfig pc;
    pc.replicas = c["replicas"];
    for (int g = 0; g <= slices; g += stride) pc.grid.push_back(g);
    pc.rate_scale = c["rate_scale"];
    pc.pass_sigma = c["pass_sigma"];
    pc.seed = derive_seed(cx.m.seed, 0xde, 2);
    pc.workers = cx.m.workers;
    pc.options.c0 = c["c0"];
    const auto& o = obs.front();
    const auto t0 = Clock::now();
    const auto reps = pde_residual_check(path, U0, o.obs, etas, pc);
    const double ms = ms_since(t0);
    for (std::size_t k = 0; k < reps.size(); ++k) {
        const auto& rep = reps[k];
        json base = obs_cell(o);
        base.update(json{{"N", N}, {"n", n}, {"site", sites[k]}, {"replicas", pc.replicas}, {"rate_scale", pc.rate_scale}});
        for (const auto& p : rep.points) {
            json cp = base;
            cp.update(json{{"t", p.t}, {"dfdt", p.dfdt}, {"bf", p.bf}, {"pass", p.pass}});
            cx.push(cp, "pde_residual", p.residual, p.se, pc.seed, ms);
        }
        for (std::size_t g = 0; g < rep.times.size(); ++g) {
            json cf = base;
            cf["t"] = rep.times[g];
            cx.push(cf, "f", rep.f[g], rep.f_se[g], pc.seed, ms);
        }
        json cs = base;
        cs.update(json{{"inconclusive", rep.inconclusive}, {"note", rep.note}, {"odd_n", rep.odd_n}});
        cx.push(cs, "pass_fraction", rep.pass_fraction, 0.0, pc.seed, ms);
    }
}

void run_matching(Context& cx) {
    const auto& c = cx.cfg;
    const int N = cx.m.resolved["ensemble"]["N"];
    const int n = c["n"];
    const auto t0 = Clock::now();
    for (int k = 1; k <= max_enumerated_particles; ++k) {
        const auto ms = enumerate_matchings(ParticleConfig::single_site(std::max(N, 1), 0, k));
        cx.push(json{{"n", k}, {"expected", double_factorial(2 * k - 1)}}, "matching_count", static_cast<double>(ms.size()), 0.0, cx.m.seed, 0.0);
    }
    const WignerSample w = sample_wigner(ensemble_from(cx.m.resolved["ensemble"], N, derive_seed(cx.m.seed, 0x3a, 0)));
    const RealVector lam = eigenvalues_only(w);
    GeneratorParams gp;
    gp.ell = c["ell"];
    gp.delta = c["delta"];
    gp.eta = c["eta"];
    const ConfigOperator B = build_generator(GeneratorKind::EtaB, lam, n, gp);
    auto lspace = std::make_shared<LambdaSpace>(N, n);
    const ConfigOperator L = build_generator(GeneratorKind::LatticeL, lam, nullptr, lspace, gp);
    const ConfigOperator S = build_generator(GeneratorKind::ShortRangeS, lam, nullptr, lspace, gp);
    const ConfigOperator A = build_generator(GeneratorKind::ProductA, lam, nullptr, lspace, gp);
    const std::vector<std::pair<std::string, const ConfigOperator*>> ops{{"B", &B}, {"L", &L}, {"S", &S}, {"A", &A}};
    for (const auto& [name, op] : ops) {
        const RealVector rs = op->matrix * RealVector::Ones(op->size());
        cx.push(json{{"operator", name}, {"N", N}, {"n", n}, {"states", op->size()}}, "row_sum_max", rs.cwiseAbs().maxCoeff(), 0.0, cx.m.seed, 0.0);
    }
    // reversibility: pi-weighted for L and S, uniform for A
    for (const auto& [name, op] : ops) {
        if (name == "B") continue;
        double worst = 0.0;
        const RealMatrix d(op->matrix);
        for (int x = 0; x < op->size(); ++x)
            for (int y = x + 1; y < op->size(); ++y) {
                const double px = name == "A" ? 1.0 : static_cast<double>(config_measure_pi(lspace->point(x)));
                const double py = name == "A" ? 1.0 : static_cast<double>(config_measure_pi(lspace->point(y)));
                worst = std::max(worst, std::abs(px * d(x, y) - py * d(y, x)));
            }
        cx.push(json{{"operator", name}, {"N", N}, {"n", n}}, "reversibility_max", worst, 0.0, cx.m.seed, 0.0);
    }
    Rng rng = make_rng(cx.m.seed, 0x3b);
    std::normal_distribution<double> nd;
    const int F = c["functions"];
    double proj = 0.0, ns = -1e300, na = -1e300, rmin = 1e300, rmax = 0.0;
    for (int f = 0; f < F; ++f) {
        RealVector fb(B.size());
        for (int i = 0; i < fb.size(); ++i) fb(i) = nd(rng);
        RealVector g(L.size());
        for (int x = 0; x < L.size(); ++x) g(x) = fb(B.eta_space->index(lspace->point(x).project(N)));
        const RealVector lg = L.apply(g), bf = B.apply(fb);
        for (int x = 0; x < L.size(); ++x)
            proj = std::max(proj, std::abs(lg(x) - bf(B.eta_space->index(lspace->point(x).project(N)))));
        RealVector h(L.size());
        for (int i = 0; i < h.size(); ++i) h(i) = nd(rng);
        const DirichletComparison dc = dirichlet_compare(h, S, A);
        ns = std::max(ns, dc.form_s);
        na = std::max(na, dc.form_a);
        if (dc.form_a != 0.0) {
            rmin = std::min(rmin, dc.ratio);
            rmax = std::max(rmax, dc.ratio);
        }
    }
    const double ms = ms_since(t0);
    json base{{"N", N}, {"n", n}, {"ell", gp.ell}, {"eta", gp.eta}, {"functions", F}};
    cx.push(base, "projection_gap", proj, 0.0, cx.m.seed, ms);
    cx.push(base, "form_s_max", ns, 0.0, cx.m.seed, ms);
    cx.push(base, "form_a_max", na, 0.0, cx.m.seed, ms);
    if (rmax > 0.0) {
        cx.push(base, "dirichlet_ratio_min", rmin, 0.0, cx.m.seed, ms);
        cx.push(base, "dirichlet_ratio_max", rmax, 0.0, cx.m.seed, ms);
    }
}

void run_identities(Context& cx) {
    const auto& e = cx.m.resolved["ensemble"];
    const int samples = cx.cfg["samples"];
    std::vector<cplx> zs;
    for (const auto& p : cx.cfg["z"]) zs.emplace_back(p[0].get<double>(), p[1].get<double>());
    for (long long Nl : cx.cfg["Ns"].get<std::vector<long long>>()) {
        const int N = static_cast<int>(Nl);
        struct Cell {
            std::vector<double> ward, under, norm2;
            double ms = 0.0;
        };
        std::vector<Cell> cells(samples);
        parallel_for(samples, cx.m.workers, [&](int s) {
            const auto t0 = Clock::now();
            const WignerSample w = sample_wigner(ensemble_from(e, N, derive_seed(cx.m.seed, 0x1d, N * 100000ULL + s)));
            const EigenSystem eig = eigendecompose(w);
            for (cplx z : zs) {
                const double g = resolvent_norm(eig.lambdas, z);
                cells[s].norm2.push_back(g * g);
                cells[s].ward.push_back(ward_residual(eig, z));
                cells[s].under.push_back(w.is_real() ? underline_identity_residual(w, z) : std::nan(""));
            }
            cells[s].ms = ms_since(t0);
        });
        for (int s = 0; s < samples; ++s)
            for (std::size_t q = 0; q < zs.size(); ++q) {
                json c{{"N", N}, {"sample", s}, {"z_re", zs[q].real()}, {"z_im", zs[q].imag()}, {"G_norm_sq", cells[s].norm2[q]}};
                const std::uint64_t seed = derive_seed(cx.m.seed, 0x1d, N * 100000ULL + s);
                cx.push(c, "ward", cells[s].ward[q] / cells[s].norm2[q], 0.0, seed, cells[s].ms);
                if (std::isfinite(cells[s].under[q]))
                    cx.push(c, "underline", cells[s].under[q] / cells[s].norm2[q], 0.0, seed, cells[s].ms);
            }
    }
}

}  // namespace

RunResult execute(const Manifest& m) {
    RunResult out;
    const json& cfg = m.resolved["config"];
    Context cx{m, cfg, out};
    const std::string& k = m.experiment;
    if (k == "sample") run_sample(cx);
    else if (k == "locallaw") run_locallaw(cx);
    else if (k == "eth") run_eth(cx);
    else if (k == "que") run_que(cx);
    else if (k == "gft") run_gft(cx);
    else if (k == "dbm") run_dbm(cx);
    else if (k == "matching") run_matching(cx);
    else if (k == "identities") run_identities(cx);
    else throw ConfigError("experiment", "unknown experiment kind '" + k + "'");
    out.summary = summarize(out.rows, k);
    return out;
}

// ---------------------------------------------------------------- summaries

namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string cell_str(const json& j) {
    if (j.is_null()) return "";
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_number()) return num(j.get<double>());
    return j.dump();
}

double median_se(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    return 1.2533 * std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

ErrorRecord record_from(const ResultRow& r) {
    ErrorRecord e;
    const json& c = r.cell;
    e.N = c.at("N");
    e.E = c.at("E");
    e.eta = c.at("eta");
    e.k = c.at("k");
    if (!c.at("alpha").is_null()) e.alpha = c.at("alpha").get<double>();
    e.alpha_effective = c.value("alpha_effective", 0.0);
    e.mode = c.value("mode", std::string("av"));
    e.vector_kind = c.value("vector_kind", std::string());
    e.regime = c.value("regime", std::string("bulk")) == "far" ? Regime::Far : Regime::Bulk;
    e.sample = c.value("sample", 0);
    e.seed = r.seed;
    e.error = r.value;
    e.psi = c.value("psi", 0.0);
    e.prediction = c.value("prediction", 0.0);
    e.ratio = c.value("ratio", 0.0);
    e.split_prediction = c.value("split_prediction", 0.0);
    e.opnorm_prediction = c.value("opnorm_prediction", 0.0);
    e.ratio_opnorm = c.value("ratio_opnorm", 0.0);
    e.skipped = c.value("skipped", false);
    return e;
}

void summarize_locallaw(std::span<const ResultRow> rows, Summary& s) {
    std::vector<ErrorRecord> recs;
    for (const auto& r : rows)
        if (r.statistic == "error" || r.statistic == "skipped") recs.push_back(record_from(r));
    using Line = std::tuple<int, double, int, double, std::string>;
    std::map<Line, std::vector<ErrorRecord>> eta_lines, n_lines;
    for (const auto& r : recs) {
        if (r.skipped) continue;
        const double a = r.alpha ? *r.alpha : -1.0;
        eta_lines[{r.N, r.E, r.k, a, r.mode}].push_back(r);
        n_lines[{0, r.E, r.k, a, r.mode}].push_back(r);
    }
    SummaryTable t{"locallaw_slopes", {"axis", "N", "E", "k", "alpha", "mode", "slope", "stderr", "points"}, {}};
    auto label = [](double a) { return a < 0 ? std::string("identity") : num(a); };
    for (const auto& [key, v] : eta_lines) {
        const auto& [N, E, k, a, mode] = key;
        try {
            const SlopeFit f = fit_scaling_exponent(v, ScalingAxis::Eta);
            t.rows.push_back({"eta", std::to_string(N), num(E), std::to_string(k), label(a), mode, num(f.slope), num(f.stderr_), std::to_string(f.points)});
        } catch (const Error& ex) {
            s.warnings.push_back("eta slope N=" + std::to_string(N) + " k=" + std::to_string(k) + ": " + ex.what());
        }
        PlotSeries p;
        p.name = "locallaw_N" + std::to_string(N) + "_E" + num(E) + "_k" + std::to_string(k) + "_" + label(a) + "_" + mode;
        p.x_label = "eta";
        p.y_label = "median_error";
        std::map<double, std::vector<double>> by;
        for (const auto& r : v) by[r.eta].push_back(r.error);
        for (auto& [eta, errs] : by) {
            p.x.push_back(eta);
            p.y.push_back(median(errs));
            p.yerr.push_back(median_se(errs));
        }
        s.plots.push_back(std::move(p));
    }
    for (const auto& [key, v] : n_lines) {
        std::set<double> etas;
        std::set<int> ns;
        for (const auto& r : v) {
            etas.insert(r.eta);
            ns.insert(r.N);
        }
        if (etas.size() != 1 || ns.size() < 4) continue;  // N-slopes need one fixed eta
        const auto& [N0, E, k, a, mode] = key;
        try {
            const SlopeFit f = fit_scaling_exponent(v, ScalingAxis::N);
            t.rows.push_back({"N", "", num(E), std::to_string(k), label(a), mode, num(f.slope), num(f.stderr_), std::to_string(f.points)});
        } catch (const Error& ex) {
            s.warnings.push_back(std::string("N slope: ") + ex.what());
        }
    }
    s.tables.push_back(std::move(t));

    SummaryTable u{"locallaw_uniformity", {"N", "E", "eta", "k", "alpha", "median_ratio", "median_ratio_opnorm", "count", "score", "score_opnorm"}, {}};
    for (const auto& rep : rank_uniformity_report(recs))
        for (const auto& row : rep.rows)
            u.rows.push_back({std::to_string(rep.N), num(rep.E), num(rep.eta), std::to_string(rep.k), num(row.alpha),
                              num(row.median_ratio), num(row.median_ratio_opnorm), std::to_string(row.count),
                              num(rep.score), num(rep.score_opnorm)});
    s.tables.push_back(std::move(u));
}

void summarize_eth(std::span<const ResultRow> rows, Summary& s) {
    std::map<std::string, std::vector<const ResultRow*>> by;
    for (const auto& r : rows)
        if (r.statistic == "eth") by[r.cell.value("observable", std::string())].push_back(&r);
    SummaryTable t{"eth", {"observable", "N", "runs", "median", "max", "threshold", "pass_rate"}, {}};
    for (const auto& [label, v] : by) {
        std::vector<double> x;
        int pass = 0;
        const double thr = v.front()->cell.value("threshold", 0.0);
        PlotSeries p{"eth_" + label, "run", "eth_statistic", {}, {}, {}};
        for (const auto* r : v) {
            x.push_back(r->value);
            pass += r->value <= thr ? 1 : 0;
            p.x.push_back(r->cell.value("run", 0));
            p.y.push_back(r->value);
            p.yerr.push_back(0.0);
        }
        t.rows.push_back({label, cell_str(v.front()->cell["N"]), std::to_string(x.size()), num(median(x)),
                          num(*std::max_element(x.begin(), x.end())), num(thr), num(static_cast<double>(pass) / x.size())});
        s.plots.push_back(std::move(p));
    }
    s.tables.push_back(std::move(t));
}

void summarize_que(std::span<const ResultRow> rows, Summary& s) {
    SummaryTable t{"que_clt", {"observable", "N", "order", "value", "mc_error", "target"}, {}};
    SummaryTable k{"que_tests", {"observable", "N", "statistic", "value", "reference"}, {}};
    std::map<std::string, PlotSeries> plots;
    for (const auto& r : rows) {
        const std::string label = r.cell.value("observable", std::string());
        if (r.statistic == "moment") {
            t.rows.push_back({label, cell_str(r.cell["N"]), cell_str(r.cell["order"]), num(r.value), num(r.mc_error), cell_str(r.cell["target"])});
            auto& p = plots[label];
            p.name = "que_moments_" + label;
            p.x_label = "order";
            p.y_label = "moment";
            p.x.push_back(r.cell["order"].get<double>());
            p.y.push_back(r.value);
            p.yerr.push_back(r.mc_error);
        } else if (r.statistic == "ks") {
            k.rows.push_back({label, cell_str(r.cell["N"]), "ks", num(r.value), cell_str(r.cell["critical_95"])});
        } else if (r.statistic == "variance_ratio") {
            k.rows.push_back({label, cell_str(r.cell["N"]), "variance_ratio", num(r.value), "1"});
        }
    }
    s.tables.push_back(std::move(t));
    s.tables.push_back(std::move(k));
    for (auto& [l, p] : plots) s.plots.push_back(std::move(p));
}

void summarize_gft(std::span<const ResultRow> rows, Summary& s) {
    SummaryTable t{"gft", {"observable", "N", "moment", "mean_a", "err_a", "mean_b", "err_b", "difference", "error"}, {}};
    std::map<std::string, PlotSeries> plots;
    for (const auto& r : rows) {
        if (r.statistic != "moment_difference") continue;
        const auto& c = r.cell;
        const std::string label = c.value("observable", std::string());
        t.rows.push_back({label, cell_str(c["N"]), cell_str(c["moment"]), cell_str(c["mean_a"]), cell_str(c["err_a"]),
                          cell_str(c["mean_b"]), cell_str(c["err_b"]), num(r.value), num(r.mc_error)});
        auto& p = plots[label + "_m" + cell_str(c["moment"])];
        p.name = "gft_" + label + "_m" + cell_str(c["moment"]);
        p.x_label = "N";
        p.y_label = "difference";
        p.x.push_back(c["N"].get<double>());
        p.y.push_back(r.value);
        p.yerr.push_back(r.mc_error);
    }
    s.tables.push_back(std::move(t));
    for (auto& [l, p] : plots) s.plots.push_back(std::move(p));
}

void summarize_dbm(std::span<const ResultRow> rows, Summary& s) {
    SummaryTable rig{"dbm_rigidity", {"N", "runs", "pass_rate", "median_worst", "max_worst", "threshold"}, {}};
    SummaryTable fl{"dbm_flucque", {"observable", "N", "n", "T", "epsilon", "paths_used", "paths_rejected", "f_pooled", "error", "target", "sup_deviation"}, {}};
    SummaryTable pde{"dbm_pde", {"site", "points", "pass_fraction", "inconclusive"}, {}};
    std::vector<double> worst;
    int pass = 0;
    std::string thr, N;
    PlotSeries rp{"dbm_rigidity", "run", "worst", {}, {}, {}};
    std::map<int, PlotSeries> pdeplots;
    std::map<int, int> pdecount;
    for (const auto& r : rows) {
        if (r.statistic == "rigidity") {
            worst.push_back(r.value);
            pass += r.cell.value("pass", false) ? 1 : 0;
            thr = cell_str(r.cell["threshold"]);
            N = cell_str(r.cell["N"]);
            rp.x.push_back(r.cell.value("run", 0));
            rp.y.push_back(r.value);
            rp.yerr.push_back(0.0);
        } else if (r.statistic == "f_pooled") {
            const auto& c = r.cell;
            double sup = 0.0;
            for (const auto& q : rows)
                if (q.statistic == "sup_deviation" && q.cell == c) sup = q.value;
            fl.rows.push_back({c.value("observable", std::string()), cell_str(c["N"]), cell_str(c["n"]), cell_str(c["T"]),
                               cell_str(c["epsilon"]), cell_str(c["paths_used"]), cell_str(c["paths_rejected"]),
                               num(r.value), num(r.mc_error), cell_str(c["target"]), num(sup)});
        } else if (r.statistic == "pde_residual") {
            const int site = r.cell.value("site", 0);
            auto& p = pdeplots[site];
            p.name = "dbm_pde_site" + std::to_string(site);
            p.x_label = "t";
            p.y_label = "residual";
            p.x.push_back(r.cell["t"].get<double>());
            p.y.push_back(r.value);
            p.yerr.push_back(r.mc_error);
            ++pdecount[site];
        } else if (r.statistic == "pass_fraction") {
            const int site = r.cell.value("site", 0);
            pde.rows.push_back({std::to_string(site), std::to_string(pdecount[site]), num(r.value), cell_str(r.cell["inconclusive"])});
        }
    }
    if (!worst.empty()) {
        rig.rows.push_back({N, std::to_string(worst.size()), num(static_cast<double>(pass) / worst.size()), num(median(worst)),
                            num(*std::max_element(worst.begin(), worst.end())), thr});
        s.tables.push_back(std::move(rig));
        s.plots.push_back(std::move(rp));
    }
    if (!fl.rows.empty()) s.tables.push_back(std::move(fl));
    if (!pde.rows.empty()) s.tables.push_back(std::move(pde));
    for (auto& [k, p] : pdeplots) s.plots.push_back(std::move(p));
}

// Statistic-level aggregates for experiments without a dedicated layout.
void summarize_generic(const std::string& name, std::span<const ResultRow> rows, Summary& s) {
    std::map<std::string, std::vector<double>> by;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        if (!by.count(r.statistic)) order.push_back(r.statistic);
        by[r.statistic].push_back(r.value);
    }
    SummaryTable t{name, {"statistic", "count", "mean", "min", "max"}, {}};
    for (const auto& st : order) {
        const auto& v = by[st];
        t.rows.push_back({st, std::to_string(v.size()), num(mean(v)), num(*std::min_element(v.begin(), v.end())),
                          num(*std::max_element(v.begin(), v.end()))});
    }
    s.tables.push_back(std::move(t));
}

}  // namespace

Summary summarize(std::span<const ResultRow> rows, const std::string& kind_in) {
    Summary s;
    if (rows.empty()) {
        s.warnings.push_back("empty input: no rows to summarize");
        return s;
    }
    const std::string kind = kind_in.empty() ? rows.front().experiment : kind_in;
    if (kind == "locallaw") summarize_locallaw(rows, s);
    else if (kind == "eth") summarize_eth(rows, s);
    else if (kind == "que") summarize_que(rows, s);
    else if (kind == "gft") summarize_gft(rows, s);
    else if (kind == "dbm") summarize_dbm(rows, s);
    else summarize_generic(kind, rows, s);

    if (kind == "sample") {
        PlotSeries p{"sample_density", "x", "density", {}, {}, {}};
        PlotSeries q{"sample_semicircle", "x", "density", {}, {}, {}};
        for (const auto& r : rows)
            if (r.statistic == "density") {
                p.x.push_back(r.cell["x"]);
                p.y.push_back(r.value);
                p.yerr.push_back(r.mc_error);
                q.x.push_back(r.cell["x"]);
                q.y.push_back(r.cell["semicircle"]);
                q.yerr.push_back(0.0);
            }
        s.plots.push_back(std::move(p));
        s.plots.push_back(std::move(q));
    } else if (kind == "identities") {
        std::map<std::pair<std::string, int>, double> worst;
        for (const auto& r : rows) {
            auto& w = worst[{r.statistic, r.cell.value("N", 0)}];
            w = std::max(w, r.value);
        }
        std::map<std::string, PlotSeries> plots;
        for (const auto& [key, v] : worst) {
            auto& p = plots[key.first];
            p.name = "identities_" + key.first;
            p.x_label = "N";
            p.y_label = "max_residual_over_G_norm_sq";
            p.x.push_back(key.second);
            p.y.push_back(v);
            p.yerr.push_back(0.0);
        }
        for (auto& [k, p] : plots) s.plots.push_back(std::move(p));
    }
    return s;
}

// ---------------------------------------------------------------- persistence

void write_summary(const Summary& s, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& t : s.tables) {
        std::ofstream out(fs::path(dir) / (t.name + ".csv"));
        for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                const bool quote = row[i].find_first_of(",\"") != std::string::npos;
                std::string f = row[i];
                if (quote) {
                    std::string q = "\"";
                    for (char ch : f) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                    f = q + "\"";
                }
                out << (i ? "," : "") << f;
            }
            out << '\n';
        }
    }
    for (const auto& p : s.plots) {
        std::ofstream out(fs::path(dir) / (p.name + ".dat"));
        out << "# " << p.x_label << ' ' << p.y_label << " yerr\n";
        for (std::size_t i = 0; i < p.x.size(); ++i) out << num(p.x[i]) << ' ' << num(p.y[i]) << ' ' << num(p.yerr[i]) << '\n';
    }
    if (!s.warnings.empty()) {
        std::ofstream out(fs::path(dir) / "warnings.txt");
        for (const auto& w : s.warnings) out << w << '\n';
    }
}

void persist(const Manifest& m, const RunResult& r) {
    fs::create_directories(m.out);
    {
        std::ofstream out(fs::path(m.out) / "manifest.resolved.json");
        out << m.resolved.dump(2) << '\n';
    }
    {
        std::ofstream out(fs::path(m.out) / "results.jsonl", std::ios::app);
        if (!out) throw Error("cannot write results to " + m.out);
        for (const auto& row : r.rows) out << row.to_json().dump() << '\n';
    }
    Summary s = r.summary;
    s.warnings.insert(s.warnings.end(), r.warnings.begin(), r.warnings.end());
    write_summary(s, m.out);
    if (!r.failures.empty()) {
        std::ofstream out(fs::path(m.out) / "failures.txt");
        for (const auto& f : r.failures) out << f << '\n';
    }
}

RunResult run(const Manifest& m) {
    RunResult r = execute(m);
    persist(m, r);
    return r;
}

}  // namespace rmt::harness
