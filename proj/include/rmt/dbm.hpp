#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rmt/eigensystem.hpp"
#include "rmt/ensembles.hpp"

namespace rmt {

enum class DbmMethod { MatrixDiagonalize = 0, SdeIntegrate = 1 };

std::string to_string(DbmMethod m);
DbmMethod dbm_method_from_string(const std::string& s);

struct DbmOptions {
    double c0 = 0.1;               // SDE step rule dt <= c0 N min gap^2
    bool record_vectors = false;
    bool weyl_check = true;        // matrix method only
    int max_refinement_depth = 12;  // halvings of a grid step before the exact leaf step
};

struct DbmDiagnostics {
    int matching_violations = 0;   // max-overlap assignment disagreed with index order
    int weyl_violations = 0;
    int ordering_violations = 0;   // SDE leaves that had to be refined for crossing
    int exact_fallbacks = 0;       // SDE leaves taken by diagonalising diag(lambda) + dB/sqrt(N)
    long long substeps = 0;
    double max_weyl_excess = 0.0;
};

struct DbmTrajectory {
    std::vector<double> times;          // 0 = t_0 < ... < t_M = T, relative to W0
    std::vector<RealVector> lambdas;    // M + 1 slices
    std::vector<RealMatrix> vectors;    // empty unless recorded
    std::uint64_t noise_seed = 0;
    DbmMethod method = DbmMethod::MatrixDiagonalize;
    double time_offset = 0.0;           // flow-time tag of W0
    DbmDiagnostics diagnostics;

    int dim() const { return lambdas.empty() ? 0 : static_cast<int>(lambdas.front().size()); }
    int steps() const { return static_cast<int>(times.size()) - 1; }
};

// Real symmetric class only. T = 0 returns the initial decomposition.
DbmTrajectory simulate_trajectory(const WignerSample& w0, double T, int steps, DbmMethod method,
                                  std::uint64_t seed, const DbmOptions& opt = {});

struct RigidityResult {
    bool pass = true;
    double worst = 0.0;
    int worst_index = -1;  // 1-based eigenvalue index
    double worst_time = 0.0;
    double threshold = 0.0;
};

// sup_t max_i N^{2/3} min(i, N+1-i)^{1/3} |lambda_i(t) - gamma_i(t)| against N^xi.
RigidityResult rigidity_check(const DbmTrajectory& traj, double xi);

// Called on every path slice (including t_0) with the replica's frame.
using FrameVisitor = std::function<void(int replica, int slice, const RealMatrix& frame)>;

// Eigenvector flow with the eigenvalue path held fixed (piecewise constant on
// the path grid) and fresh off-diagonal noise per replica. Replica r uses the
// stream (seed, r). The visitor may be called concurrently for distinct replicas.
DbmDiagnostics conditional_vector_ensemble(const DbmTrajectory& lambda_path, const RealMatrix& U0,
                                           int replicas, std::uint64_t seed, const FrameVisitor& visit,
                                           const DbmOptions& opt = {}, int workers = 1);

// Collected frames for small problems: result[r][m].
std::vector<std::vector<RealMatrix>> conditional_vector_frames(const DbmTrajectory& lambda_path,
                                                               const RealMatrix& U0, int replicas,
                                                               std::uint64_t seed,
                                                               const DbmOptions& opt = {});

// One Euler-Maruyama step of the eigenvector SDE at fixed eigenvalues, followed
// by QR re-orthonormalization with positive R diagonal. dB holds the
// off-diagonal increments (symmetric, variance h).
void eigenvector_em_step(RealMatrix& U, const RealVector& lambda, const RealMatrix& dB, double h);

double min_gap(const RealVector& lambda);

}  // namespace rmt
