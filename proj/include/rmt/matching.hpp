#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rmt/eigenvector_stats.hpp"
#include "rmt/observables.hpp"

namespace rmt {

// eta in Omega^n: occupation numbers over 0-based sites.
struct ParticleConfig {
    std::vector<int> counts;

    int N() const { return static_cast<int>(counts.size()); }
    int n() const;
    std::vector<int> support() const;
    std::vector<int> sorted_sites() const;  // multiset of sites, ascending

    static ParticleConfig single_site(int N, int site, int particles);
    static ParticleConfig from_sites(int N, std::span<const int> sites);
    bool operator==(const ParticleConfig&) const = default;
};

// x in [N]^{2n}; a member of Lambda^n when every multiplicity is even.
struct LatticePoint {
    std::vector<int> coords;

    int multiplicity(int site) const;
    bool in_lambda() const;
    // phi(x): eta_i = n_i(x) / 2
    ParticleConfig project(int N) const;
    bool operator==(const LatticePoint&) const = default;
};

struct Vertex {
    int site;
    int copy;  // 0 .. 2 eta_site - 1
};

using Matching = std::vector<std::pair<Vertex, Vertex>>;

constexpr int max_enumerated_particles = 6;

// All perfect matchings of V_eta = {(i, a) : a < 2 eta_i}; (2n-1)!! of them.
std::vector<Matching> enumerate_matchings(const ParticleConfig& eta);

// M(eta) = prod_i (2 eta_i - 1)!!
long long matching_multiplicity(const ParticleConfig& eta);

// Sum over perfect matchings of prod over edges of p(site_u, site_v).
template <class P>
double matching_sum(const std::vector<Matching>& matchings, P&& p) {
    double total = 0.0;
    for (const auto& g : matchings) {
        double prod = 1.0;
        for (const auto& [u, v] : g) prod *= p(u.site, v.site);
        total += prod;
    }
    return total;
}

// N^{n/2} / ((2<A^2>)^{n/2} (n-1)!! M(eta)); odd n uses the double factorial of the even n-1.
double f_normalization(const ParticleConfig& eta, double hs2);

struct FEstimate {
    double value = 0.0;
    double mc_error = 0.0;
    int samples = 0;
    bool odd_n = false;
};

// MC estimate of f(eta) from independent overlap samples (centered overlaps p_ij - delta_ij <A>).
FEstimate observable_f(const ParticleConfig& eta, std::span<const OverlapSet> samples, const Observable& a);

// pi(x) = prod_i ((n_i(x) - 1)!!)^2
long long config_measure_pi(const LatticePoint& x);

// (1/K) #{ j in [K, 2K-1] : |x - y|_1 < j }
double averaging_op(const LatticePoint& x, const LatticePoint& y, int K);

}  // namespace rmt
