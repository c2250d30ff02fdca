#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmt/eigensystem.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/observables.hpp"

namespace rmt {

// p_ij = <u_i, A u_j> with the bulk index window [delta N, (1 - delta) N].
struct OverlapSet {
    AnyMatrix p;
    int bulk_lo = 0;  // 0-based, inclusive
    int bulk_hi = -1;
    double delta = 0.1;
    const Observable* observable = nullptr;

    int dim() const;
    cplx operator()(int i, int j) const;
};

// 0-based inclusive index range of 1-based i with delta N <= i <= (1 - delta) N.
std::pair<int, int> bulk_window(int N, double delta);

OverlapSet overlap_matrix(const EigenSystem& eig, const Observable& a, double delta = 0.1);

// Diagonal overlaps <u_i, A u_i> for the listed indices only.
std::vector<cplx> diagonal_overlaps(const EigenSystem& eig, const Observable& a,
                                    std::span<const int> indices);

// max over bulk i, j of sqrt(N) |p_ij - delta_ij <A>| / <|A - <A>|^2>^{1/2}
double eth_statistic(const OverlapSet& ov, double delta);

struct QueConfig {
    double delta = 0.1;
    int n_samples = 2000;
    int per_matrix = 8;          // well-separated bulk indices pooled per matrix
    double rank_exponent = 0.99; // effective rank check <A^2> N^e >= ||A||^2
    int workers = 1;
};

struct QueSamples {
    std::vector<double> values;
    std::vector<int> batch;       // matrix index of each value
    bool effective_rank_ok = true;
    std::string pooling_policy;
    int matrices = 0;
};

// Normalized statistic sqrt(beta N / (2 <A^2>)) (<u_i, A u_i> - <A>) pooled over
// independent matrices; all observables share the same matrices and indices.
std::vector<QueSamples> que_samples(const EnsembleSpec& spec, std::span<const Observable* const> obs,
                                    const QueConfig& cfg);
QueSamples que_samples(const EnsembleSpec& spec, const Observable& a, const QueConfig& cfg);

struct MomentRow {
    int order = 0;
    double value = 0.0;
    double mc_error = 0.0;
    double target = 0.0;
};

struct CltReport {
    std::size_t count = 0;
    std::vector<MomentRow> moments;  // orders 1..8
    double ks = 0.0;
    double ks_critical = 0.0;        // 95% level
    double variance = 0.0;
    double variance_ratio = 0.0;     // variance / target_variance
    double target_variance = 1.0;
};

CltReport normality_tests(std::span<const double> samples, double target_variance = 1.0);

struct ComparisonConfig {
    double delta = 0.1;
    int matrices = 100;
    int per_matrix = 0;  // 0 pools every bulk index
    int workers = 1;
};

struct ComparisonRow {
    int moment = 0;
    double mean_a = 0.0, err_a = 0.0;
    double mean_b = 0.0, err_b = 0.0;
    double difference = 0.0;
    double error = 0.0;
};

// E theta(normalized overlap) for theta(x) = x^n in both ensembles, with
// batch-means errors over matrices.
std::vector<ComparisonRow> two_ensemble_comparison(const EnsembleSpec& a, const EnsembleSpec& b,
                                                   const Observable& obs, std::span<const int> moments,
                                                   const ComparisonConfig& cfg);

}  // namespace rmt
