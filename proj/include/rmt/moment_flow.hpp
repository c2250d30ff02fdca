#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmt/config_space.hpp"
#include "rmt/dbm.hpp"
#include "rmt/observables.hpp"

namespace rmt {

struct PdeCheckConfig {
    int replicas = 1000;
    std::vector<int> grid;     // increasing slice indices into the lambda path, >= 3 entries
    double rate_scale = 1.0;   // multiplier applied to B
    double pass_sigma = 2.0;
    std::uint64_t seed = 0;
    int workers = 1;
    DbmOptions options;
};

struct PdePoint {
    double t = 0.0;
    double dfdt = 0.0;      // centered difference of f
    double bf = 0.0;        // B(t) f
    double residual = 0.0;  // mean over replicas of dfdt - B f
    double se = 0.0;        // pooled MC standard error of the residual
    bool pass = false;      // |residual| <= pass_sigma * se
};

struct PdeReport {
    ParticleConfig eta;
    std::vector<double> times;  // grid times
    std::vector<double> f;      // f_t(eta) on the grid
    std::vector<double> f_se;
    std::vector<PdePoint> points;  // interior grid points
    double pass_fraction = 0.0;
    bool inconclusive = false;
    bool odd_n = false;
    std::string note;
};

// f_t(eta) from the conditional eigenvector ensemble on a fixed lambda path,
// compared with the moment-flow equation d/dt f = B(t) f. All etas share one
// particle number n.
std::vector<PdeReport> pde_residual_check(const DbmTrajectory& lambda_path, const RealMatrix& U0,
                                          const Observable& a, std::span<const ParticleConfig> etas,
                                          const PdeCheckConfig& cfg);

struct FlucqueConfig {
    int paths = 20;            // rigidity-passing paths to collect
    int max_attempts = 200;
    int steps = 10;
    double xi = 0.5;           // rigidity filter exponent
    double delta = 0.1;        // bulk configurations only
    int stride = 1;            // every stride-th bulk site
    DbmMethod method = DbmMethod::MatrixDiagonalize;
    std::uint64_t seed = 0;
};

struct FlucqueReport {
    int N = 0;
    int n = 0;
    double T = 0.0;
    double epsilon = 0.0;      // T = N^{-1 + epsilon}
    int paths_used = 0;
    int paths_rejected = 0;
    int configs = 0;
    double target = 0.0;       // 1(n even)
    double pooled_f = 0.0;
    double pooled_error = 0.0; // batch means over paths
    double pooled_deviation = 0.0;
    double sup_deviation = 0.0;  // max over configurations of |mean over paths - target|
    bool odd_n = false;
};

// Single-site configurations eta = n e_i over bulk sites i, evaluated on the
// terminal eigenvectors of DBM runs started from independent samples of spec.
FlucqueReport flucque_experiment(const EnsembleSpec& spec, const Observable& a, int n, double T,
                                 const FlucqueConfig& cfg);

}  // namespace rmt
