#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmt/ensembles.hpp"
#include "rmt/resolvent.hpp"

namespace rmt {

enum class Regime { Bulk, Far };

struct SweepConfig {
    std::vector<int> Ns;
    std::vector<double> etas;           // absolute eta values
    std::vector<double> eta_exponents;  // eta = N^{-e}, appended to etas
    std::vector<double> energies{0.0};
    std::vector<int> ks{1};
    std::vector<double> alphas{1.0};
    bool include_identity = false;  // extra k = 1 line with A = I
    int samples_per_cell = 10;
    Regime regime = Regime::Bulk;
    double epsilon = 0.1;           // bulk cells need N eta rho >= N^epsilon
    ChainMode mode = ChainMode::Averaged;
    EnsembleSpec ensemble;          // N and seed are set per cell
    std::uint64_t seed = 0;
    int workers = 1;
};

struct ErrorRecord {
    int N = 0;
    double E = 0.0;
    double eta = 0.0;
    int k = 0;
    std::optional<double> alpha;  // empty for the identity line
    double alpha_effective = 0.0;
    std::string mode = "av";
    std::string vector_kind;      // isotropic sweeps: "coordinate" or "haar"
    Regime regime = Regime::Bulk;
    int sample = 0;
    std::uint64_t seed = 0;
    double error = 0.0;
    double psi = 0.0;
    double prediction = 0.0;
    double ratio = 0.0;
    double split_prediction = 0.0;   // k = 1 only
    double opnorm_prediction = 0.0;  // hs2^{1/2} replaced by the operator norm
    double ratio_opnorm = 0.0;
    bool skipped = false;
    std::string warning;
};

// Error bound of the averaged law for k observables.
double bulk_prediction(int N, int k, double hs_product, double rho, double eta);
double far_prediction(int N, int k, double hs_product, double d);
double isotropic_bulk_prediction(int N, int k, double hs_product, double rho, double eta);
double isotropic_far_prediction(int N, int k, double hs_product, double d);
double split_prediction(int N, double trace_avg, double hs2, double rho, double eta);

std::vector<ErrorRecord> run_error_sweep(const SweepConfig& cfg);

enum class ScalingAxis { Eta, N };

struct SlopeFit {
    double slope = 0.0;
    double stderr_ = 0.0;
    double intercept = 0.0;
    int points = 0;
    std::vector<double> axis;
    std::vector<double> medians;
};

// Log-log slope of per-cell median raw error along one sweep line.
SlopeFit fit_scaling_exponent(std::span<const ErrorRecord> records, ScalingAxis axis);

struct UniformityRow {
    double alpha = 0.0;
    double median_ratio = 0.0;
    double median_ratio_opnorm = 0.0;
    int count = 0;
};

struct UniformityReport {
    int N = 0;
    double eta = 0.0;
    double E = 0.0;
    int k = 0;
    std::vector<UniformityRow> rows;
    double score = 0.0;          // max/min of median ratios
    double score_opnorm = 0.0;
};

// One report per (N, E, eta, k) slice that spans at least three alphas.
std::vector<UniformityReport> rank_uniformity_report(std::span<const ErrorRecord> records);

}  // namespace rmt
