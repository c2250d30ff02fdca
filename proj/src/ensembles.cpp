#include "rmt/ensembles.hpp"

#include <cmath>
#include <numeric>

#include "rmt/errors.hpp"

namespace rmt {

ScalarDistribution ScalarDistribution::named(const std::string& name) {
    ScalarDistribution d;
    if (name == "gaussian") d.kind = DistributionKind::Gaussian;
    else if (name == "rademacher") d.kind = DistributionKind::Rademacher;
    else if (name == "uniform") d.kind = DistributionKind::Uniform;
    else throw ConfigError("distribution", "unknown distribution '" + name + "'");
    return d;
}

ScalarDistribution ScalarDistribution::from_table(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw ConfigError("distribution.table", "empty table");
    double wsum = 0.0;
    for (auto& [v, w] : atoms) {
        if (!(w >= 0.0)) throw ConfigError("distribution.table", "negative weight");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw ConfigError("distribution.table", "weights sum to zero");
    for (auto& a : atoms) a.second /= wsum;
    ScalarDistribution d;
    d.kind = DistributionKind::Table;
    d.table = std::move(atoms);
    if (std::abs(d.moment(1)) > 1e-9 || std::abs(d.moment(2) - 1.0) > 1e-9)
        throw ConfigError("distribution.table", "table law must have mean 0 and variance 1");
    return d;
}

std::string ScalarDistribution::name() const {
    switch (kind) {
        case DistributionKind::Gaussian: return "gaussian";
        case DistributionKind::Rademacher: return "rademacher";
        case DistributionKind::Uniform: return "uniform";
        case DistributionKind::Table: return "table";
    }
    return "?";
}

double ScalarDistribution::moment(int k) const {
    switch (kind) {
        case DistributionKind::Gaussian: {
            if (k % 2) return 0.0;
            double r = 1.0;
            for (int j = k - 1; j > 0; j -= 2) r *= j;
            return r;
        }
        case DistributionKind::Rademacher: return k % 2 ? 0.0 : 1.0;
        case DistributionKind::Uniform:
            return k % 2 ? 0.0 : std::pow(std::sqrt(3.0), k) / (k + 1);
        case DistributionKind::Table: {
            double r = 0.0;
            for (auto [v, w] : table) r += w * std::pow(v, k);
            return r;
        }
    }
    return 0.0;
}

double ScalarDistribution::draw(Rng& rng) const {
    switch (kind) {
        case DistributionKind::Gaussian: {
            std::normal_distribution<double> n;
            return n(rng);
        }
        case DistributionKind::Rademacher: return (rng() >> 63) ? 1.0 : -1.0;
        case DistributionKind::Uniform: {
            std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
            return u(rng);
        }
        case DistributionKind::Table: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double x = u(rng), acc = 0.0;
            for (auto [v, w] : table) {
                acc += w;
                if (x < acc) return v;
            }
            return table.back().first;
        }
    }
    return 0.0;
}

EnsembleSpec EnsembleSpec::goe(int N, std::uint64_t seed) {
    EnsembleSpec s;
    s.N = N;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::gue(int N, std::uint64_t seed) {
    EnsembleSpec s = goe(N, seed);
    s.symmetry = Symmetry::Complex;
    return s;
}

EnsembleSpec EnsembleSpec::real_named(int N, const std::string& dist, std::uint64_t seed) {
    EnsembleSpec s = goe(N, seed);
    s.offdiag = ScalarDistribution::named(dist);
    s.diag = ScalarDistribution::named(dist);
    return s;
}

EnsembleSpec EnsembleSpec::with_seed(std::uint64_t s) const {
    EnsembleSpec c = *this;
    c.seed = s;
    return c;
}

int WignerSample::dim() const {
    return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, matrix);
}

const RealMatrix& WignerSample::real() const {
    if (!is_real()) throw UsageError("sample is complex Hermitian");
    return std::get<RealMatrix>(matrix);
}

const ComplexMatrix& WignerSample::complex() const {
    if (is_real()) throw UsageError("sample is real symmetric");
    return std::get<ComplexMatrix>(matrix);
}

WignerSample sample_wigner(const EnsembleSpec& spec) {
    Rng rng = make_rng(spec.seed, 0);
    return sample_wigner(spec, rng);
}

WignerSample sample_wigner(const EnsembleSpec& spec, Rng& rng) {
    const int N = spec.N;
    if (N < 2) throw UsageError("sample_wigner needs N >= 2");
    const double s = 1.0 / std::sqrt(static_cast<double>(N));
    WignerSample w;
    w.spec = spec;
    if (spec.symmetry == Symmetry::Real) {
        RealMatrix a(N, N);
        const double sd = std::sqrt(2.0);
        for (int i = 0; i < N; ++i) {
            a(i, i) = sd * spec.diag.draw(rng) * s;
            for (int j = i + 1; j < N; ++j) {
                const double v = spec.offdiag.draw(rng) * s;
                a(i, j) = v;
                a(j, i) = v;
            }
        }
        w.matrix = std::move(a);
    } else {
        ComplexMatrix a(N, N);
        const double h = std::sqrt(0.5);
        for (int i = 0; i < N; ++i) {
            a(i, i) = spec.diag.draw(rng) * s;
            for (int j = i + 1; j < N; ++j) {
                const double re = spec.offdiag.draw(rng);
                const double im = spec.offdiag.draw(rng);
                const cplx v = cplx(re, im) * (h * s);
                a(i, j) = v;
                a(j, i) = std::conj(v);
            }
        }
        w.matrix = std::move(a);
    }
    return w;
}

namespace {

template <class M>
M gaussian_symmetric(int N, double dt, Rng& rng);

template <>
RealMatrix gaussian_symmetric<RealMatrix>(int N, double dt, Rng& rng) {
    std::normal_distribution<double> n;
    RealMatrix b(N, N);
    const double sd = std::sqrt(dt), sdd = std::sqrt(2.0 * dt);
    for (int i = 0; i < N; ++i) {
        b(i, i) = sdd * n(rng);
        for (int j = i + 1; j < N; ++j) {
            const double v = sd * n(rng);
            b(i, j) = v;
            b(j, i) = v;
        }
    }
    return b;
}

template <>
ComplexMatrix gaussian_symmetric<ComplexMatrix>(int N, double dt, Rng& rng) {
    std::normal_distribution<double> n;
    ComplexMatrix b(N, N);
    const double sd = std::sqrt(dt), h = std::sqrt(0.5 * dt);
    for (int i = 0; i < N; ++i) {
        b(i, i) = sd * n(rng);
        for (int j = i + 1; j < N; ++j) {
            const double re = n(rng), im = n(rng);
            const cplx v(h * re, h * im);
            b(i, j) = v;
            b(j, i) = std::conj(v);
        }
    }
    return b;
}

}  // namespace

WignerSample brownian_increment(const WignerSample& w, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError("brownian_increment needs dt > 0");
    WignerSample out = w;
    const int N = w.dim();
    const double s = 1.0 / std::sqrt(static_cast<double>(N));
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            m += gaussian_symmetric<M>(N, dt, rng) * s;
        },
        out.matrix);
    out.time = w.time + dt;
    return out;
}

WignerSample ou_step(const WignerSample& w, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError("ou_step needs dt > 0");
    WignerSample out = w;
    const int N = w.dim();
    const double s = 1.0 / std::sqrt(static_cast<double>(N));
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            m = (1.0 - 0.5 * dt) * m + gaussian_symmetric<M>(N, dt, rng) * s;
        },
        out.matrix);
    out.ou_time = w.ou_time + dt;
    return out;
}

double ou_variance_constant(double T) {
    if (!(T > 0.0)) throw DomainError("c(T) needs T > 0");
    return -std::expm1(-T) / T;
}

WignerSample gaussian_interpolate(const WignerSample& w_tilde, const WignerSample& u_goe, double T) {
    if (!(T > 0.0 && T < 1.0)) throw DomainError("gaussian_interpolate needs T in (0, 1)");
    if (w_tilde.dim() != u_goe.dim() || w_tilde.is_real() != u_goe.is_real())
        throw UsageError("gaussian_interpolate: mismatched dimension or symmetry class");
    if (!u_goe.spec.offdiag.is_gaussian() || !u_goe.spec.diag.is_gaussian())
        throw UsageError("gaussian_interpolate: second argument must be a Gaussian ensemble");
    const double ct = -std::expm1(-T);  // c(T) * T
    const double a = std::sqrt(1.0 - ct), b = std::sqrt(ct);
    WignerSample out = w_tilde;
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            m = a * m + b * std::get<M>(u_goe.matrix);
        },
        out.matrix);
    out.time = (1.0 - ct) * w_tilde.time + ct * u_goe.time;
    return out;
}

double offdiag_second_moment(const WignerSample& w) {
    const int N = w.dim();
    double acc = 0.0;
    std::visit(
        [&](const auto& m) {
            for (int j = 1; j < N; ++j)
                for (int i = 0; i < j; ++i) acc += std::norm(m(i, j));
        },
        w.matrix);
    return acc / (0.5 * N * (N - 1.0));
}

}  // namespace rmt
