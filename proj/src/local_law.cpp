#include "rmt/local_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "rmt/errors.hpp"
#include "rmt/observables.hpp"
#include "rmt/parallel.hpp"
#include "rmt/stats.hpp"

namespace rmt {

double bulk_prediction(int N, int k, double hs_product, double rho, double eta) {
    return std::pow(N, k / 2.0 - 1.0) * hs_product * std::sqrt(rho / (N * eta));
}

double far_prediction(int N, int k, double hs_product, double d) {
    return std::pow(N, k / 2.0 - 1.0) * hs_product / (std::sqrt(static_cast<double>(N)) * std::pow(d, k + 1));
}

double isotropic_bulk_prediction(int N, int k, double hs_product, double rho, double eta) {
    return std::pow(N, k / 2.0) * hs_product * std::sqrt(rho / (N * eta));
}

double isotropic_far_prediction(int N, int k, double hs_product, double d) {
    return std::pow(N, k / 2.0) * hs_product / (std::sqrt(static_cast<double>(N)) * std::pow(d, k + 2));
}

double split_prediction(int N, double trace_avg, double hs2, double rho, double eta) {
    return std::abs(trace_avg) / (N * eta) + std::sqrt(rho * hs2) / (N * std::sqrt(eta));
}

namespace {

struct Cell {
    double E, eta;
    cplx z;
    SpectralPoint sp;
    bool valid;
    std::string warning;
};

struct LineObservable {
    Observable obs;
    bool identity;
    std::optional<double> alpha;
    std::vector<double> trace_powers;  // <A^k>
};

std::vector<double> etas_for(const SweepConfig& cfg, int N) {
    std::vector<double> e = cfg.etas;
    for (double x : cfg.eta_exponents) e.push_back(std::pow(static_cast<double>(N), -x));
    return e;
}

void validate(const SweepConfig& cfg) {
    if (cfg.Ns.empty()) throw ConfigError("Ns", "at least one dimension required");
    for (int n : cfg.Ns)
        if (n < 2) throw ConfigError("Ns", "dimensions must be >= 2");
    if (cfg.etas.empty() && cfg.eta_exponents.empty())
        throw ConfigError("etas", "at least one eta required");
    for (double e : cfg.etas)
        if (!(e > 0.0)) throw ConfigError("etas", "eta must be positive");
    if (cfg.energies.empty()) throw ConfigError("energies", "at least one energy required");
    if (cfg.ks.empty()) throw ConfigError("ks", "at least one chain length required");
    for (int k : cfg.ks) {
        if (k < 0 || (k == 0 && cfg.mode == ChainMode::Averaged))
            throw ConfigError("ks", "averaged chains need k >= 1, isotropic k >= 0");
    }
    for (double a : cfg.alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alphas", "alpha must lie in [0, 1]");
    if (cfg.samples_per_cell < 1) throw ConfigError("samples_per_cell", "must be >= 1");
}

}  // namespace

std::vector<ErrorRecord> run_error_sweep(const SweepConfig& cfg) {
    validate(cfg);
    const bool iso = cfg.mode == ChainMode::Isotropic;
    const int kmax = *std::max_element(cfg.ks.begin(), cfg.ks.end());

    struct Task {
        int N;
        int sample;
        int n_index;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<LineObservable>> obs_by_n;
    std::vector<std::vector<Cell>> cells_by_n;
    std::vector<ErrorRecord> skipped;

    for (std::size_t ni = 0; ni < cfg.Ns.size(); ++ni) {
        const int N = cfg.Ns[ni];
        std::vector<LineObservable> lines;
        for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
            LineObservable l{make_alpha_mesoscopic(N, cfg.alphas[ai], derive_seed(cfg.seed, 0xa1fa, N * 64 + ai)),
                             false, cfg.alphas[ai], {}};
            lines.push_back(std::move(l));
        }
        if (cfg.include_identity && !iso) lines.push_back({identity_observable(N), true, std::nullopt, {}});
        if (!iso) {
            for (auto& l : lines) {
                l.trace_powers.assign(kmax + 1, 1.0);
                if (l.identity) continue;
                RealMatrix p = l.obs.matrix();
                for (int k = 1; k <= kmax; ++k) {
                    if (k > 1) p = p * l.obs.matrix();
                    l.trace_powers[k] = p.trace() / N;
                }
            }
        }
        obs_by_n.push_back(std::move(lines));

        std::vector<Cell> cells;
        for (double E : cfg.energies)
            for (double eta : etas_for(cfg, N)) {
                Cell c{E, eta, cplx(E, eta), SpectralPoint::at(cplx(E, eta)), true, ""};
                if (cfg.regime == Regime::Bulk) {
                    const double lhs = N * c.sp.eta * c.sp.rho;
                    if (lhs < std::pow(static_cast<double>(N), cfg.epsilon)) {
                        c.valid = false;
                        c.warning = "bulk cell violates N*eta*rho >= N^epsilon";
                    }
                } else if (c.sp.d < 10.0) {
                    c.valid = false;
                    c.warning = "far cell violates d >= 10";
                }
                if (!c.valid) {
                    for (int k : cfg.ks) {
                        ErrorRecord r;
                        r.N = N;
                        r.E = E;
                        r.eta = eta;
                        r.k = k;
                        r.mode = iso ? "iso" : "av";
                        r.regime = cfg.regime;
                        r.sample = -1;
                        r.skipped = true;
                        r.warning = c.warning;
                        skipped.push_back(r);
                    }
                }
                cells.push_back(c);
            }
        cells_by_n.push_back(std::move(cells));
        for (int s = 0; s < cfg.samples_per_cell; ++s) tasks.push_back({N, s, static_cast<int>(ni)});
    }

    if (cfg.workers > 1) set_blas_threads(1);
    std::vector<std::vector<ErrorRecord>> out(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), cfg.workers, [&](int ti) {
        const Task& t = tasks[ti];
        const int N = t.N;
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(N), t.sample);
        EnsembleSpec spec = cfg.ensemble;
        spec.N = N;
        spec.seed = seed;
        const WignerSample w = sample_wigner(spec);
        const EigenSystem eig = eigendecompose(w);
        EigenbasisView view(eig);

        ComplexVector x;
        std::string vkind;
        if (iso) {
            Rng rng = make_rng(seed, 0x15);
            if (t.sample % 2 == 0) {
                std::uniform_int_distribution<int> pick(0, N - 1);
                x = ComplexVector::Zero(N);
                x(pick(rng)) = 1.0;
                vkind = "coordinate";
            } else {
                std::normal_distribution<double> n;
                x.resize(N);
                for (int i = 0; i < N; ++i) x(i) = n(rng);
                x /= x.norm();
                vkind = "haar";
            }
        }

        auto& records = out[ti];
        for (const Cell& c : cells_by_n[t.n_index]) {
            if (!c.valid) continue;
            const cplx m = stieltjes_m(c.z);
            for (int k : cfg.ks) {
                for (const auto& line : obs_by_n[t.n_index]) {
                    if (line.identity && k != 1) continue;
                    const Observable& A = line.obs;
                    ErrorRecord r;
                    r.N = N;
                    r.E = c.E;
                    r.eta = c.eta;
                    r.k = k;
                    r.alpha = line.alpha;
                    r.alpha_effective = line.identity ? std::numeric_limits<double>::quiet_NaN()
                                                      : A.alpha().value_or(0.0);
                    r.mode = iso ? "iso" : "av";
                    r.vector_kind = vkind;
                    r.regime = cfg.regime;
                    r.sample = t.sample;
                    r.seed = seed;

                    const double hs = std::pow(std::sqrt(A.hs2()), k);
                    const double op = std::pow(A.opnorm(), k);
                    const double rho = c.sp.rho, eta = c.sp.eta, d = c.sp.d;
                    if (!iso) {
                        auto chain = ChainDescriptor::averaged_plain(std::vector<cplx>(k, c.z),
                                                                     std::vector<const Observable*>(k, &A));
                        const cplx det = std::pow(m, k) * line.trace_powers[k];
                        r.error = std::abs(chain_average(view, chain) - det);
                        if (line.identity) {
                            r.prediction = cfg.regime == Regime::Bulk ? 1.0 / (N * eta) : 1.0 / (N * d * d);
                            r.opnorm_prediction = r.prediction;
                            r.psi = N * eta * r.error;
                        } else if (cfg.regime == Regime::Bulk) {
                            r.prediction = bulk_prediction(N, k, hs, rho, eta);
                            r.opnorm_prediction = bulk_prediction(N, k, op, rho, eta);
                            r.psi = r.error / r.prediction;
                        } else {
                            r.prediction = far_prediction(N, k, hs, d);
                            r.opnorm_prediction = far_prediction(N, k, op, d);
                            r.psi = r.error / bulk_prediction(N, k, hs, rho, eta);
                        }
                        if (k == 1) r.split_prediction = split_prediction(N, A.trace_avg(), A.hs2(), rho, eta);
                    } else {
                        auto chain = ChainDescriptor::isotropic_plain(std::vector<cplx>(k + 1, c.z),
                                                                      std::vector<const Observable*>(k, &A));
                        ComplexVector v = x;
                        for (int j = 0; j < k; ++j) {
                            ComplexVector next(N);
                            next.real() = A.matrix() * v.real();
                            next.imag() = A.matrix() * v.imag();
                            v = next;
                        }
                        const cplx det = std::pow(m, k + 1) * x.dot(v);
                        r.error = std::abs(chain_isotropic(view, chain, x, x) - det);
                        const double bulk = isotropic_bulk_prediction(N, k, hs, rho, eta);
                        if (cfg.regime == Regime::Bulk) {
                            r.prediction = bulk;
                            r.opnorm_prediction = isotropic_bulk_prediction(N, k, op, rho, eta);
                        } else {
                            r.prediction = isotropic_far_prediction(N, k, hs, d);
                            r.opnorm_prediction = isotropic_far_prediction(N, k, op, d);
                        }
                        r.psi = r.error / bulk;
                    }
                    r.ratio = r.error / r.prediction;
                    r.ratio_opnorm = r.error / r.opnorm_prediction;
                    records.push_back(std::move(r));
                }
            }
        }
    });

    std::vector<ErrorRecord> all = std::move(skipped);
    for (auto& v : out)
        for (auto& r : v) all.push_back(std::move(r));
    return all;
}

SlopeFit fit_scaling_exponent(std::span<const ErrorRecord> records, ScalingAxis axis) {
    using Key = std::tuple<int, double, double, int, double, std::string>;
    std::map<double, std::vector<double>> by_axis;
    std::optional<Key> line;
    for (const auto& r : records) {
        if (r.skipped) continue;
        const double a = r.alpha ? *r.alpha : -1.0;
        Key k = axis == ScalingAxis::Eta ? Key{r.N, r.E, 0.0, r.k, a, r.mode}
                                         : Key{0, r.E, 0.0, r.k, a, r.mode};
        if (!line) line = k;
        else if (*line != k) throw UsageError("records span more than one sweep line");
        by_axis[axis == ScalingAxis::Eta ? r.eta : static_cast<double>(r.N)].push_back(r.error);
    }
    if (by_axis.size() < 4) throw NumericalError("scaling fit needs at least four axis values");
    SlopeFit f;
    std::vector<double> lx, ly;
    for (auto& [a, errs] : by_axis) {
        const double med = median(errs);
        if (!(med > 0.0)) throw NumericalError("non-positive median error in scaling fit");
        f.axis.push_back(a);
        f.medians.push_back(med);
        lx.push_back(std::log(a));
        ly.push_back(std::log(med));
    }
    const LinearFit lf = least_squares(lx, ly);
    f.slope = lf.slope;
    f.stderr_ = lf.slope_stderr;
    f.intercept = lf.intercept;
    f.points = lf.points;
    return f;
}

std::vector<UniformityReport> rank_uniformity_report(std::span<const ErrorRecord> records) {
    using Key = std::tuple<int, double, double, int>;
    std::map<Key, std::map<double, std::pair<std::vector<double>, std::vector<double>>>> groups;
    for (const auto& r : records) {
        if (r.skipped || !r.alpha) continue;
        auto& g = groups[{r.N, r.E, r.eta, r.k}][*r.alpha];
        g.first.push_back(r.ratio);
        g.second.push_back(r.ratio_opnorm);
    }
    std::vector<UniformityReport> out;
    for (auto& [key, by_alpha] : groups) {
        if (by_alpha.size() < 3) continue;
        UniformityReport rep;
        std::tie(rep.N, rep.E, rep.eta, rep.k) = key;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        double lo_op = lo, hi_op = 0.0;
        for (auto& [alpha, v] : by_alpha) {
            UniformityRow row{alpha, median(v.first), median(v.second), static_cast<int>(v.first.size())};
            lo = std::min(lo, row.median_ratio);
            hi = std::max(hi, row.median_ratio);
            lo_op = std::min(lo_op, row.median_ratio_opnorm);
            hi_op = std::max(hi_op, row.median_ratio_opnorm);
            rep.rows.push_back(row);
        }
        rep.score = hi / lo;
        rep.score_opnorm = hi_op / lo_op;
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace rmt
