#include "rmt/eigenvector_stats.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"
#include "rmt/random.hpp"
#include "rmt/stats.hpp"

namespace rmt {

int OverlapSet::dim() const {
    return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, p);
}

cplx OverlapSet::operator()(int i, int j) const {
    return std::visit([&](const auto& m) { return cplx(m(i, j)); }, p);
}

std::pair<int, int> bulk_window(int N, double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("delta must lie in (0, 1/2)");
    const int lo = static_cast<int>(std::ceil(delta * N - 1e-9));
    const int hi = static_cast<int>(std::floor((1.0 - delta) * N + 1e-9));
    return {std::max(lo, 1) - 1, hi - 1};
}

OverlapSet overlap_matrix(const EigenSystem& eig, const Observable& a, double delta) {
    if (a.dim() != eig.dim()) throw UsageError("overlap_matrix: dimension mismatch");
    OverlapSet ov;
    if (eig.is_real()) {
        const RealMatrix& u = eig.real_vectors();
        RealMatrix au = a.matrix() * u;
        ov.p = RealMatrix(u.transpose() * au);
    } else {
        const ComplexMatrix& u = eig.complex_vectors();
        ComplexMatrix au = a.matrix().cast<cplx>() * u;
        ov.p = ComplexMatrix(u.adjoint() * au);
    }
    std::tie(ov.bulk_lo, ov.bulk_hi) = bulk_window(eig.dim(), delta);
    ov.delta = delta;
    ov.observable = &a;
    return ov;
}

std::vector<cplx> diagonal_overlaps(const EigenSystem& eig, const Observable& a,
                                    std::span<const int> indices) {
    const int N = eig.dim();
    const int n = static_cast<int>(indices.size());
    for (int i : indices)
        if (i < 0 || i >= N) throw UsageError("eigenvector index out of range");
    std::vector<cplx> out(n);
    if (eig.is_real()) {
        const RealMatrix& u = eig.real_vectors();
        RealMatrix cols(N, n);
        for (int k = 0; k < n; ++k) cols.col(k) = u.col(indices[k]);
        const RealMatrix ac = a.matrix() * cols;
        for (int k = 0; k < n; ++k) out[k] = cols.col(k).dot(ac.col(k));
    } else {
        const ComplexMatrix& u = eig.complex_vectors();
        ComplexMatrix cols(N, n);
        for (int k = 0; k < n; ++k) cols.col(k) = u.col(indices[k]);
        const ComplexMatrix ac = a.matrix().cast<cplx>() * cols;
        for (int k = 0; k < n; ++k) out[k] = cols.col(k).dot(ac.col(k));
    }
    return out;
}

double eth_statistic(const OverlapSet& ov, double delta) {
    if (ov.observable == nullptr) throw UsageError("overlap set without observable");
    const int N = ov.dim();
    auto [lo, hi] = bulk_window(N, delta);
    if (hi < lo) throw UsageError("empty bulk window");
    const double avg = ov.observable->trace_avg();
    double worst = 0.0;
    for (int j = lo; j <= hi; ++j)
        for (int i = lo; i <= hi; ++i) {
            const cplx v = ov(i, j) - (i == j ? avg : 0.0);
            worst = std::max(worst, std::abs(v));
        }
    const double hs = std::sqrt(ov.observable->hs2());
    if (hs == 0.0) {
        // A is a multiple of the identity: p = <A> I up to rounding
        return worst <= 1e-10 * std::max(1.0, std::abs(avg)) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::sqrt(static_cast<double>(N)) * worst / hs;
}

namespace {

std::vector<int> pick_indices(int lo, int hi, int per, Rng& rng) {
    const int width = hi - lo + 1;
    if (per <= 0 || per >= width) {
        std::vector<int> all(width);
        for (int i = 0; i < width; ++i) all[i] = lo + i;
        return all;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double off = u(rng);
    const double spacing = static_cast<double>(width) / per;
    std::vector<int> idx(per);
    for (int k = 0; k < per; ++k)
        idx[k] = std::min(hi, lo + static_cast<int>(std::floor((k + off) * spacing)));
    return idx;
}

double normalization(const EnsembleSpec& spec, const Observable& a) {
    return std::sqrt(spec.beta() * spec.N / (2.0 * a.hs2()));
}

}  // namespace

std::vector<QueSamples> que_samples(const EnsembleSpec& spec, std::span<const Observable* const> obs,
                                    const QueConfig& cfg) {
    if (obs.empty()) throw UsageError("que_samples needs an observable");
    if (cfg.n_samples < 1 || cfg.per_matrix < 1) throw UsageError("que_samples: bad sample counts");
    for (const auto* a : obs) {
        if (a->dim() != spec.N) throw UsageError("que_samples: dimension mismatch");
        if (a->hs2() == 0.0) throw DegenerateError("observable has vanishing traceless part");
    }
    auto [lo, hi] = bulk_window(spec.N, cfg.delta);
    const int per = std::min(cfg.per_matrix, hi - lo + 1);
    const int matrices = (cfg.n_samples + per - 1) / per;

    std::vector<std::vector<std::vector<double>>> vals(matrices);
    if (cfg.workers > 1) set_blas_threads(1);
    parallel_for(matrices, cfg.workers, [&](int m) {
        const std::uint64_t s = derive_seed(spec.seed, 0x9e, m);
        const WignerSample w = sample_wigner(spec.with_seed(s));
        const EigenSystem eig = eigendecompose(w);
        Rng rng = make_rng(s, 0x1d);
        std::vector<int> idx = pick_indices(lo, hi, per, rng);
        const int take = std::min<int>(per, cfg.n_samples - m * per);
        idx.resize(take);
        vals[m].resize(obs.size());
        for (std::size_t o = 0; o < obs.size(); ++o) {
            const auto d = diagonal_overlaps(eig, *obs[o], idx);
            const double c = normalization(spec, *obs[o]);
            for (const cplx& v : d) vals[m][o].push_back(c * (v.real() - obs[o]->trace_avg()));
        }
    });

    std::vector<QueSamples> out(obs.size());
    for (std::size_t o = 0; o < obs.size(); ++o) {
        auto& q = out[o];
        q.matrices = matrices;
        q.pooling_policy = "per_matrix=" + std::to_string(per) + " evenly spaced bulk indices, random offset";
        const double n_rank = std::pow(static_cast<double>(spec.N), cfg.rank_exponent);
        q.effective_rank_ok = obs[o]->hs2() * n_rank >= obs[o]->opnorm() * obs[o]->opnorm();
        for (int m = 0; m < matrices; ++m)
            for (double v : vals[m][o]) {
                q.values.push_back(v);
                q.batch.push_back(m);
            }
    }
    return out;
}

QueSamples que_samples(const EnsembleSpec& spec, const Observable& a, const QueConfig& cfg) {
    const Observable* p = &a;
    return que_samples(spec, std::span<const Observable* const>(&p, 1), cfg).front();
}

CltReport normality_tests(std::span<const double> samples, double target_variance) {
    if (samples.size() < 500) throw UsageError("normality_tests needs at least 500 samples");
    CltReport rep;
    rep.count = samples.size();
    rep.target_variance = target_variance;
    std::vector<double> pw(samples.size());
    for (int n = 1; n <= 8; ++n) {
        for (std::size_t i = 0; i < samples.size(); ++i) pw[i] = std::pow(samples[i], n);
        const MeanError me = mean_with_error(pw);
        rep.moments.push_back({n, me.mean, me.error, n % 2 ? 0.0 : static_cast<double>(double_factorial(n - 1))});
    }
    rep.variance = sample_variance(samples);
    rep.variance_ratio = rep.variance / target_variance;
    rep.ks = ks_distance_normal(std::vector<double>(samples.begin(), samples.end()));
    rep.ks_critical = ks_critical_95(samples.size());
    return rep;
}

std::vector<ComparisonRow> two_ensemble_comparison(const EnsembleSpec& a, const EnsembleSpec& b,
                                                   const Observable& obs, std::span<const int> moments,
                                                   const ComparisonConfig& cfg) {
    if (a.N != b.N || a.symmetry != b.symmetry)
        throw UsageError("two_ensemble_comparison needs matching N and symmetry class");
    if (obs.dim() != a.N) throw UsageError("observable dimension mismatch");
    if (obs.hs2() == 0.0) throw DegenerateError("observable has vanishing traceless part");
    if (cfg.matrices < 2) throw UsageError("two_ensemble_comparison needs >= 2 matrices");
    auto [lo, hi] = bulk_window(a.N, cfg.delta);
    const std::size_t nm = moments.size();

    // per matrix, per moment: mean of theta over the pooled indices
    auto run = [&](const EnsembleSpec& spec) {
        std::vector<std::vector<double>> batch(cfg.matrices, std::vector<double>(nm));
        parallel_for(cfg.matrices, cfg.workers, [&](int m) {
            const std::uint64_t s = derive_seed(spec.seed, 0x6f7, m);
            const WignerSample w = sample_wigner(spec.with_seed(s));
            const EigenSystem eig = eigendecompose(w);
            Rng rng = make_rng(s, 0x1d);
            const std::vector<int> idx = pick_indices(lo, hi, cfg.per_matrix, rng);
            const auto d = diagonal_overlaps(eig, obs, idx);
            const double c = normalization(spec, obs);
            for (std::size_t q = 0; q < nm; ++q) {
                double acc = 0.0;
                for (const cplx& v : d) acc += std::pow(c * (v.real() - obs.trace_avg()), moments[q]);
                batch[m][q] = acc / static_cast<double>(d.size());
            }
        });
        std::vector<MeanError> res(nm);
        for (std::size_t q = 0; q < nm; ++q) {
            std::vector<double> col(cfg.matrices);
            for (int m = 0; m < cfg.matrices; ++m) col[m] = batch[m][q];
            res[q] = mean_with_error(col);
        }
        return res;
    };
    if (cfg.workers > 1) set_blas_threads(1);
    const auto ra = run(a);
    const auto rb = run(b);
    std::vector<ComparisonRow> rows;
    for (std::size_t q = 0; q < nm; ++q) {
        ComparisonRow r;
        r.moment = moments[q];
        r.mean_a = ra[q].mean;
        r.err_a = ra[q].error;
        r.mean_b = rb[q].mean;
        r.err_b = rb[q].error;
        r.difference = r.mean_a - r.mean_b;
        r.error = std::sqrt(r.err_a * r.err_a + r.err_b * r.err_b);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace rmt
