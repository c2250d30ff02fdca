#include "rmt/moment_flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rmt/errors.hpp"
#include "rmt/random.hpp"
#include "rmt/stats.hpp"

namespace rmt {

std::vector<PdeReport> pde_residual_check(const DbmTrajectory& path, const RealMatrix& U0, const Observable& a,
                                          std::span<const ParticleConfig> etas, const PdeCheckConfig& cfg) {
    if (etas.empty()) throw UsageError("pde_residual_check needs at least one configuration");
    const int N = path.dim();
    const int n = etas.front().n();
    for (const auto& e : etas)
        if (e.N() != N || e.n() != n) throw UsageError("configurations must share N and n");
    if (a.dim() != N) throw UsageError("observable dimension differs from the path");
    if (a.hs2() == 0.0) throw DegenerateError("observable has vanishing traceless part");
    const auto& grid = cfg.grid;
    if (grid.size() < 3) throw UsageError("time grid needs at least 3 slices");
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (grid[g] < 0 || grid[g] > path.steps()) throw UsageError("grid slice outside the path");
        if (g > 0 && grid[g] <= grid[g - 1]) throw UsageError("grid slices must increase");
    }
    const int G = static_cast<int>(grid.size());

    std::vector<PdeReport> reports(etas.size());
    for (std::size_t e = 0; e < etas.size(); ++e) {
        reports[e].eta = etas[e];
        reports[e].odd_n = n % 2 == 1;
        for (int g = 0; g < G; ++g) reports[e].times.push_back(path.times[grid[g]]);
    }
    if (cfg.replicas < 2) {
        for (auto& r : reports) {
            r.inconclusive = true;
            r.note = "fewer than two replicas";
        }
        return reports;
    }

    // B(t) on the interior grid points; f is needed on the targets and their B-neighbours.
    auto space = std::make_shared<EtaSpace>(N, n);
    GeneratorParams gp;
    gp.rate_scale = cfg.rate_scale;
    std::vector<ConfigOperator> bops(G);
    for (int g = 1; g + 1 < G; ++g)
        bops[g] = build_generator(GeneratorKind::EtaB, path.lambdas[grid[g]], space, nullptr, gp);
    std::map<int, int> compact;
    std::vector<int> targets;
    for (const auto& e : etas) {
        const int s = space->index(e);
        targets.push_back(s);
        compact.emplace(s, 0);
        const auto& B = bops[1].matrix;
        for (SparseOp::InnerIterator it(B, s); it; ++it) compact.emplace(static_cast<int>(it.col()), 0);
    }
    std::vector<int> needed;
    for (auto& [s, k] : compact) {
        k = static_cast<int>(needed.size());
        needed.push_back(s);
    }
    const int C = static_cast<int>(needed.size());
    std::vector<std::vector<Matching>> matchings(C);
    std::vector<double> norm(C);
    for (int c = 0; c < C; ++c) {
        const ParticleConfig z = space->config(needed[c]);
        matchings[c] = enumerate_matchings(z);
        norm[c] = f_normalization(z, a.hs2());
    }

    std::vector<int> slot_of(path.steps() + 1, -1);
    for (int g = 0; g < G; ++g) slot_of[grid[g]] = g;
    const int R = cfg.replicas;
    std::vector<double> F(static_cast<std::size_t>(R) * G * C, 0.0);
    const RealMatrix& Ac = a.centered();

    conditional_vector_ensemble(
        path, U0, R, cfg.seed,
        [&](int r, int m, const RealMatrix& U) {
            const int g = slot_of[m];
            if (g < 0) return;
            const RealMatrix P = U.transpose() * Ac * U;
            auto p = [&](int i, int j) { return P(i, j); };
            double* out = &F[(static_cast<std::size_t>(r) * G + g) * C];
            for (int c = 0; c < C; ++c) out[c] = norm[c] * matching_sum(matchings[c], p);
        },
        cfg.options, cfg.workers);

    auto at = [&](int r, int g, int c) { return F[(static_cast<std::size_t>(r) * G + g) * C + c]; };

    for (std::size_t e = 0; e < etas.size(); ++e) {
        PdeReport& rep = reports[e];
        const int ct = compact.at(targets[e]);
        for (int g = 0; g < G; ++g) {
            std::vector<double> v(R);
            for (int r = 0; r < R; ++r) v[r] = at(r, g, ct);
            const MeanError me = mean_with_error(v);
            rep.f.push_back(me.mean);
            rep.f_se.push_back(me.error);
        }
        int passed = 0;
        std::vector<double> ses, drift, slope;
        for (int g = 1; g + 1 < G; ++g) {
            const double dt = path.times[grid[g + 1]] - path.times[grid[g - 1]];
            const auto& B = bops[g].matrix;
            std::vector<double> res(R), lhs(R), rhs(R);
            for (int r = 0; r < R; ++r) {
                lhs[r] = (at(r, g + 1, ct) - at(r, g - 1, ct)) / dt;
                double bf = 0.0;
                for (SparseOp::InnerIterator it(B, targets[e]); it; ++it)
                    bf += it.value() * at(r, g, compact.at(static_cast<int>(it.col())));
                rhs[r] = bf;
                res[r] = lhs[r] - bf;
            }
            PdePoint pt;
            pt.t = path.times[grid[g]];
            pt.dfdt = mean(lhs);
            pt.bf = mean(rhs);
            const MeanError me = mean_with_error(res);
            pt.residual = me.mean;
            pt.se = me.error;
            pt.pass = std::abs(pt.residual) <= cfg.pass_sigma * pt.se;
            passed += pt.pass ? 1 : 0;
            ses.push_back(pt.se);
            drift.push_back(std::abs(pt.bf));
            slope.push_back(std::abs(pt.dfdt));
            rep.points.push_back(pt);
        }
        rep.pass_fraction = static_cast<double>(passed) / rep.points.size();
        bool finite = true;
        for (double s : ses) finite = finite && std::isfinite(s);
        const double mse = median(ses);
        if (!finite) {
            rep.inconclusive = true;
            rep.note = "non-finite error bars";
        } else if (mse > median(drift) && mse > median(slope)) {
            rep.inconclusive = true;
            rep.note = "MC error exceeds both sides of the equation";
        }
    }
    return reports;
}

FlucqueReport flucque_experiment(const EnsembleSpec& spec, const Observable& a, int n, double T,
                                 const FlucqueConfig& cfg) {
    if (spec.symmetry != Symmetry::Real) throw UsageError("the DBM experiment is implemented for the real class");
    if (n < 1 || n > max_enumerated_particles) throw UsageError("flucque_experiment needs 1 <= n <= 6");
    if (!(T > 0.0)) throw DomainError("flucque_experiment needs T > 0");
    const int N = spec.N;
    if (a.dim() != N) throw UsageError("observable dimension differs from the ensemble");
    if (a.hs2() == 0.0) throw DegenerateError("observable has vanishing traceless part");
    if (cfg.stride < 1) throw UsageError("stride must be positive");

    FlucqueReport rep;
    rep.N = N;
    rep.n = n;
    rep.T = T;
    rep.epsilon = 1.0 + std::log(T) / std::log(static_cast<double>(N));
    rep.target = n % 2 == 0 ? 1.0 : 0.0;
    rep.odd_n = n % 2 == 1;

    const auto [lo, hi] = bulk_window(N, cfg.delta);
    std::vector<int> sites;
    for (int i = lo; i <= hi; i += cfg.stride) sites.push_back(i);
    if (sites.empty()) throw UsageError("no bulk configurations selected");
    rep.configs = static_cast<int>(sites.size());

    // single site: the sum over matchings is (2n-1)!! p_ii^n
    const double norm = f_normalization(ParticleConfig::single_site(N, sites.front(), n), a.hs2()) *
                        static_cast<double>(double_factorial(2 * n - 1));
    const RealMatrix& Ac = a.centered();
    DbmOptions opt;
    opt.record_vectors = true;

    std::vector<double> values;
    std::vector<int> batch;
    std::vector<double> per_site(sites.size(), 0.0);
    for (int attempt = 0; attempt < cfg.max_attempts && rep.paths_used < cfg.paths; ++attempt) {
        const WignerSample w0 = sample_wigner(spec.with_seed(derive_seed(cfg.seed, 0xf1, attempt)));
        const DbmTrajectory tr = simulate_trajectory(w0, T, cfg.steps, cfg.method,
                                                     derive_seed(cfg.seed, 0xf2, attempt), opt);
        if (!rigidity_check(tr, cfg.xi).pass) {
            ++rep.paths_rejected;
            continue;
        }
        const RealMatrix& U = tr.vectors.back();
        for (std::size_t k = 0; k < sites.size(); ++k) {
            const auto u = U.col(sites[k]);
            const double p = u.dot(Ac * u);
            const double f = norm * std::pow(p, n);
            values.push_back(f);
            batch.push_back(rep.paths_used);
            per_site[k] += f;
        }
        ++rep.paths_used;
    }
    if (rep.paths_used == 0) throw NumericalError("no DBM path passed the rigidity filter");
    const MeanError me = rep.paths_used > 1 ? batch_mean_with_error(values, batch) : mean_with_error(values);
    rep.pooled_f = me.mean;
    rep.pooled_error = me.error;
    rep.pooled_deviation = std::abs(me.mean - rep.target);
    for (double s : per_site) rep.sup_deviation = std::max(rep.sup_deviation, std::abs(s / rep.paths_used - rep.target));
    return rep;
}

}  // namespace rmt
