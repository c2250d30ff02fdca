#include "rmt/dbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"
#include "rmt/spectral.hpp"

namespace rmt {

std::string to_string(DbmMethod m) {
    return m == DbmMethod::MatrixDiagonalize ? "matrix-diagonalize" : "sde-integrate";
}

DbmMethod dbm_method_from_string(const std::string& s) {
    if (s == "matrix-diagonalize") return DbmMethod::MatrixDiagonalize;
    if (s == "sde-integrate") return DbmMethod::SdeIntegrate;
    throw ConfigError("method", "unknown DBM method '" + s + "'");
}

double min_gap(const RealVector& lambda) {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < lambda.size(); ++i) g = std::min(g, lambda(i + 1) - lambda(i));
    return g;
}

namespace {

// Symmetric Gaussian matrix: off-diagonal variance v, diagonal variance 2v.
RealMatrix symmetric_noise(int N, double v, Rng& rng) {
    std::normal_distribution<double> n;
    RealMatrix b(N, N);
    const double so = std::sqrt(v), sd = std::sqrt(2.0 * v);
    for (int i = 0; i < N; ++i) {
        b(i, i) = sd * n(rng);
        for (int j = i + 1; j < N; ++j) {
            const double x = so * n(rng);
            b(i, j) = x;
            b(j, i) = x;
        }
    }
    return b;
}

bool strictly_increasing(const RealVector& l) {
    for (Eigen::Index i = 0; i + 1 < l.size(); ++i)
        if (!(l(i + 1) > l(i))) return false;
    return true;
}

void orthonormalize(RealMatrix& U) {
    const int N = static_cast<int>(U.rows());
    Eigen::HouseholderQR<RealMatrix> qr(U);
    RealMatrix q = qr.householderQ() * RealMatrix::Identity(N, N);
    const auto& r = qr.matrixQR();
    for (int j = 0; j < N; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    U = std::move(q);
}

struct SdeState {
    RealVector lambda;
    RealMatrix U;
    bool vectors;
};

void sde_leaf(SdeState& s, const RealMatrix& X, double h) {
    const int N = static_cast<int>(s.lambda.size());
    const double sn = std::sqrt(static_cast<double>(N));
    RealVector next(N);
    for (int i = 0; i < N; ++i) {
        double drift = 0.0;
        for (int j = 0; j < N; ++j)
            if (j != i) drift += 1.0 / (s.lambda(i) - s.lambda(j));
        next(i) = s.lambda(i) + X(i, i) / sn + h * drift / N;
    }
    if (s.vectors) eigenvector_em_step(s.U, s.lambda, X, h);
    s.lambda = std::move(next);
}

void sde_integrate(SdeState& s, const RealMatrix& X, double h, int depth, const DbmOptions& opt,
                   Rng& rng, DbmDiagnostics& diag) {
    const int N = static_cast<int>(s.lambda.size());
    const double gap = min_gap(s.lambda);
    if (h <= opt.c0 * N * gap * gap) {
        SdeState trial = s;
        sde_leaf(trial, X, h);
        if (strictly_increasing(trial.lambda)) {
            s = std::move(trial);
            ++diag.substeps;
            return;
        }
        ++diag.ordering_violations;
    }
    if (depth >= opt.max_refinement_depth) {
        // For beta = 1 the pair gap is a dimension-2 Bessel process and paths
        // come within rounding distance of collision. The increment is
        // rotation invariant, so diagonalising diag(lambda) + X / sqrt(N) is an
        // exact step of the same law.
        RealMatrix M = X / std::sqrt(static_cast<double>(N));
        M.diagonal() += s.lambda;
        const EigenSystem e = eigendecompose(M);
        RealMatrix V = e.real_vectors();
        for (int j = 0; j < N; ++j)
            if (V(j, j) < 0.0) V.col(j) = -V.col(j);
        if (s.vectors) {
            RealMatrix U = s.U * V;
            orthonormalize(U);
            s.U = std::move(U);
        }
        s.lambda = e.lambdas;
        ++diag.exact_fallbacks;
        ++diag.substeps;
        return;
    }
    // Brownian bridge midpoint
    const RealMatrix X1 = 0.5 * X + symmetric_noise(N, h / 4.0, rng);
    const RealMatrix X2 = X - X1;
    sde_integrate(s, X1, h / 2.0, depth + 1, opt, rng, diag);
    sde_integrate(s, X2, h / 2.0, depth + 1, opt, rng, diag);
}

}  // namespace

void eigenvector_em_step(RealMatrix& U, const RealVector& lambda, const RealMatrix& dB, double h) {
    const int N = static_cast<int>(lambda.size());
    const double sn = std::sqrt(static_cast<double>(N));
    RealMatrix M(N, N);
    for (int i = 0; i < N; ++i) {
        double diag = 0.0;
        for (int j = 0; j < N; ++j) {
            if (j == i) continue;
            const double d = lambda(i) - lambda(j);
            M(j, i) = dB(i, j) / (sn * d);
            diag += 1.0 / (d * d);
        }
        M(i, i) = -0.5 * h * diag / N;
    }
    RealMatrix next = U + U * M;
    orthonormalize(next);
    U = std::move(next);
}

DbmTrajectory simulate_trajectory(const WignerSample& w0, double T, int steps, DbmMethod method,
                                  std::uint64_t seed, const DbmOptions& opt) {
    if (!w0.is_real()) throw UsageError("DBM simulation is implemented for the real symmetric class");
    if (!(T >= 0.0)) throw DomainError("negative flow time");
    if (steps < 1) throw UsageError("simulate_trajectory needs steps >= 1");
    const int N = w0.dim();
    DbmTrajectory tr;
    tr.noise_seed = seed;
    tr.method = method;
    tr.time_offset = w0.time;
    EigenSystem e0 = eigendecompose(w0);
    tr.times.push_back(0.0);
    tr.lambdas.push_back(e0.lambdas);
    if (opt.record_vectors) tr.vectors.push_back(e0.real_vectors());
    if (T == 0.0) return tr;

    Rng rng = make_rng(seed, 0xdb);
    const double dt = T / steps;
    const double sn = std::sqrt(static_cast<double>(N));

    if (method == DbmMethod::MatrixDiagonalize) {
        RealMatrix W = w0.real();
        RealMatrix U = e0.real_vectors();
        RealVector lam = e0.lambdas;
        for (int m = 1; m <= steps; ++m) {
            const RealMatrix dB = symmetric_noise(N, dt, rng);
            W += dB / sn;
            EigenSystem e = eigendecompose(W);
            RealMatrix Un = e.real_vectors();
            const RealMatrix O = U.transpose() * Un;
            for (int i = 0; i < N; ++i) {
                Eigen::Index best;
                O.col(i).cwiseAbs().maxCoeff(&best);
                if (best != i) ++tr.diagnostics.matching_violations;
                if (O(i, i) < 0.0) Un.col(i) = -Un.col(i);
            }
            if (opt.weyl_check) {
                const RealVector ev = eigenvalues_only(dB);
                const double bound = std::max(std::abs(ev(0)), std::abs(ev(N - 1))) / sn;
                const double moved = (e.lambdas - lam).cwiseAbs().maxCoeff();
                const double excess = moved - bound;
                if (excess > 1e-10 * (1.0 + bound)) {
                    ++tr.diagnostics.weyl_violations;
                    tr.diagnostics.max_weyl_excess = std::max(tr.diagnostics.max_weyl_excess, excess);
                }
            }
            lam = e.lambdas;
            U = std::move(Un);
            tr.times.push_back(m * dt);
            tr.lambdas.push_back(lam);
            if (opt.record_vectors) tr.vectors.push_back(U);
            ++tr.diagnostics.substeps;
        }
        return tr;
    }

    SdeState s{e0.lambdas, e0.real_vectors(), opt.record_vectors};
    for (int m = 1; m <= steps; ++m) {
        const RealMatrix X = symmetric_noise(N, dt, rng);
        sde_integrate(s, X, dt, 0, opt, rng, tr.diagnostics);
        tr.times.push_back(m * dt);
        tr.lambdas.push_back(s.lambda);
        if (opt.record_vectors) tr.vectors.push_back(s.U);
    }
    return tr;
}

RigidityResult rigidity_check(const DbmTrajectory& traj, double xi) {
    RigidityResult r;
    const int N = traj.dim();
    if (N == 0) throw UsageError("empty trajectory");
    r.threshold = std::pow(static_cast<double>(N), xi);
    const std::vector<double> g0 = semicircle_quantiles(N, 0.0);
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    for (std::size_t m = 0; m < traj.times.size(); ++m) {
        const double t = traj.time_offset + traj.times[m];
        const double s = std::sqrt(1.0 + t);
        for (int i = 1; i <= N; ++i) {
            const double w = n23 * std::cbrt(static_cast<double>(std::min(i, N + 1 - i)));
            const double v = w * std::abs(traj.lambdas[m](i - 1) - s * g0[i - 1]);
            if (v > r.worst) {
                r.worst = v;
                r.worst_index = i;
                r.worst_time = t;
            }
        }
    }
    r.pass = r.worst <= r.threshold;
    return r;
}

DbmDiagnostics conditional_vector_ensemble(const DbmTrajectory& path, const RealMatrix& U0,
                                           int replicas, std::uint64_t seed, const FrameVisitor& visit,
                                           const DbmOptions& opt, int workers) {
    if (replicas < 1) throw UsageError("conditional_vector_ensemble needs replicas >= 1");
    const int N = path.dim();
    if (U0.rows() != N || U0.cols() != N) throw UsageError("initial frame has the wrong shape");
    if ((U0.transpose() * U0 - RealMatrix::Identity(N, N)).cwiseAbs().maxCoeff() > 1e-8)
        throw UsageError("initial frame is not orthonormal");
    const int M = path.steps();
    std::vector<int> sub(M);
    std::vector<double> h(M);
    long long per_replica = 0;
    for (int m = 0; m < M; ++m) {
        const double span = path.times[m + 1] - path.times[m];
        const double gap = min_gap(path.lambdas[m]);
        const double hmax = opt.c0 * N * gap * gap;
        if (!(hmax > 0.0)) throw NumericalError("degenerate eigenvalues on the fixed path");
        sub[m] = std::max(1, static_cast<int>(std::ceil(span / hmax)));
        h[m] = span / sub[m];
        per_replica += sub[m];
    }
    if (workers > 1) set_blas_threads(1);
    parallel_for(replicas, workers, [&](int r) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> n;
        RealMatrix U = U0;
        RealMatrix dB = RealMatrix::Zero(N, N);
        visit(r, 0, U);
        for (int m = 0; m < M; ++m) {
            const double sd = std::sqrt(h[m]);
            for (int s = 0; s < sub[m]; ++s) {
                for (int i = 0; i < N; ++i)
                    for (int j = i + 1; j < N; ++j) {
                        const double x = sd * n(rng);
                        dB(i, j) = x;
                        dB(j, i) = x;
                    }
                eigenvector_em_step(U, path.lambdas[m], dB, h[m]);
            }
            visit(r, m + 1, U);
        }
    });
    DbmDiagnostics d;
    d.substeps = per_replica * replicas;
    return d;
}

std::vector<std::vector<RealMatrix>> conditional_vector_frames(const DbmTrajectory& path,
                                                               const RealMatrix& U0, int replicas,
                                                               std::uint64_t seed,
                                                               const DbmOptions& opt) {
    std::vector<std::vector<RealMatrix>> out(replicas, std::vector<RealMatrix>(path.times.size()));
    conditional_vector_ensemble(
        path, U0, replicas, seed,
        [&](int r, int m, const RealMatrix& U) { out[r][m] = U; }, opt, 1);
    return out;
}

}  // namespace rmt
