#include "rmt/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rmt/errors.hpp"
#include "rmt/stats.hpp"

namespace rmt {

int ParticleConfig::n() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
}

std::vector<int> ParticleConfig::support() const {
    std::vector<int> s;
    for (int i = 0; i < N(); ++i)
        if (counts[i] > 0) s.push_back(i);
    return s;
}

std::vector<int> ParticleConfig::sorted_sites() const {
    std::vector<int> s;
    for (int i = 0; i < N(); ++i)
        for (int k = 0; k < counts[i]; ++k) s.push_back(i);
    return s;
}

ParticleConfig ParticleConfig::single_site(int N, int site, int particles) {
    if (site < 0 || site >= N || particles < 0) throw UsageError("single_site: bad arguments");
    ParticleConfig c;
    c.counts.assign(N, 0);
    c.counts[site] = particles;
    return c;
}

ParticleConfig ParticleConfig::from_sites(int N, std::span<const int> sites) {
    ParticleConfig c;
    c.counts.assign(N, 0);
    for (int s : sites) {
        if (s < 0 || s >= N) throw UsageError("particle site out of range");
        ++c.counts[s];
    }
    return c;
}

int LatticePoint::multiplicity(int site) const {
    return static_cast<int>(std::count(coords.begin(), coords.end(), site));
}

bool LatticePoint::in_lambda() const {
    if (coords.size() % 2) return false;
    std::map<int, int> m;
    for (int c : coords) ++m[c];
    for (auto [s, k] : m)
        if (k % 2) return false;
    return true;
}

ParticleConfig LatticePoint::project(int N) const {
    if (!in_lambda()) throw DomainError("lattice point has an odd multiplicity");
    ParticleConfig c;
    c.counts.assign(N, 0);
    for (int x : coords) {
        if (x < 0 || x >= N) throw UsageError("lattice coordinate out of range");
        ++c.counts[x];
    }
    for (int& k : c.counts) k /= 2;
    return c;
}

namespace {

void extend(std::vector<Vertex>& free, Matching& cur, std::vector<Matching>& out) {
    if (free.empty()) {
        out.push_back(cur);
        return;
    }
    const Vertex first = free.front();
    for (std::size_t k = 1; k < free.size(); ++k) {
        std::vector<Vertex> rest;
        for (std::size_t q = 1; q < free.size(); ++q)
            if (q != k) rest.push_back(free[q]);
        cur.push_back({first, free[k]});
        extend(rest, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Matching> enumerate_matchings(const ParticleConfig& eta) {
    const int n = eta.n();
    if (n > max_enumerated_particles)
        throw UsageError("too many particles for exhaustive matching enumeration; use a sampling estimator");
    std::vector<Vertex> v;
    for (int i = 0; i < eta.N(); ++i)
        for (int a = 0; a < 2 * eta.counts[i]; ++a) v.push_back({i, a});
    std::vector<Matching> out;
    Matching cur;
    extend(v, cur, out);
    return out;
}

long long matching_multiplicity(const ParticleConfig& eta) {
    long long m = 1;
    for (int c : eta.counts) m *= double_factorial(2 * c - 1);
    return m;
}

double f_normalization(const ParticleConfig& eta, double hs2) {
    if (!(hs2 > 0.0)) throw DegenerateError("observable has vanishing traceless part");
    const int n = eta.n();
    const double N = eta.N();
    return std::pow(N / (2.0 * hs2), n / 2.0) /
           (static_cast<double>(double_factorial(n - 1)) * static_cast<double>(matching_multiplicity(eta)));
}

FEstimate observable_f(const ParticleConfig& eta, std::span<const OverlapSet> samples, const Observable& a) {
    if (samples.empty()) throw UsageError("observable_f needs at least one overlap sample");
    if (a.hs2() == 0.0) throw DegenerateError("observable has vanishing traceless part");
    const auto matchings = enumerate_matchings(eta);
    const double norm = f_normalization(eta, a.hs2());
    const double avg = a.trace_avg();
    std::vector<double> vals;
    for (const auto& ov : samples) {
        if (ov.dim() != eta.N()) throw UsageError("overlap sample dimension mismatch");
        auto p = [&](int i, int j) { return (ov(i, j) - (i == j ? avg : 0.0)).real(); };
        vals.push_back(norm * matching_sum(matchings, p));
    }
    FEstimate f;
    const MeanError me = mean_with_error(vals);
    f.value = me.mean;
    f.mc_error = me.error;
    f.samples = static_cast<int>(vals.size());
    f.odd_n = eta.n() % 2 == 1;
    return f;
}

long long config_measure_pi(const LatticePoint& x) {
    if (!x.in_lambda()) throw DomainError("pi is defined on Lambda^n only");
    std::map<int, int> m;
    for (int c : x.coords) ++m[c];
    long long p = 1;
    for (auto [s, k] : m) {
        const long long d = double_factorial(k - 1);
        p *= d * d;
    }
    return p;
}

double averaging_op(const LatticePoint& x, const LatticePoint& y, int K) {
    if (K < 1) throw UsageError("averaging operator needs K >= 1");
    if (x.coords.size() != y.coords.size()) throw UsageError("lattice points of different length");
    long long dist = 0;
    for (std::size_t a = 0; a < x.coords.size(); ++a) dist += std::abs(x.coords[a] - y.coords[a]);
    int count = 0;
    for (int j = K; j <= 2 * K - 1; ++j)
        if (dist < j) ++count;
    return static_cast<double>(count) / K;
}

}  // namespace rmt
