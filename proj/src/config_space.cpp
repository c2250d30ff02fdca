#include "rmt/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>

#include "rmt/errors.hpp"
#include "rmt/spectral.hpp"

namespace rmt {

namespace {

void nondecreasing(int N, int n, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == n) {
        out.push_back(cur);
        return;
    }
    const int start = cur.empty() ? 0 : cur.back();
    for (int s = start; s < N; ++s) {
        cur.push_back(s);
        nondecreasing(N, n, cur, out);
        cur.pop_back();
    }
}

bool even_multiplicities(const std::vector<int>& x, std::vector<int>& scratch) {
    for (int c : x) scratch[c] ^= 1;
    bool ok = true;
    for (int c : x) {
        if (scratch[c]) ok = false;
        scratch[c] = 0;
    }
    return ok;
}

void check_budget(int N, int n, const GeneratorParams& p) {
    if (N < 2) throw UsageError("configuration space needs N >= 2");
    if (n < 1) throw UsageError("configuration space needs n >= 1");
    if (N > p.max_N || n > p.max_n)
        throw BudgetError("configuration-space size exceeds budget (N <= " + std::to_string(p.max_N) +
                          ", n <= " + std::to_string(p.max_n) + ")");
}

using Triplet = Eigen::Triplet<double>;

SparseOp assemble(int size, std::vector<Triplet>& trip) {
    std::vector<double> out(size, 0.0);
    for (const auto& t : trip) out[t.row()] += t.value();
    for (int r = 0; r < size; ++r) trip.emplace_back(r, r, -out[r]);
    SparseOp m(size, size);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

// All orderings (a_1, b_1, ..., a_n, b_n) of the 2n coordinate slots.
std::vector<std::vector<int>> slot_pairings(int n) {
    std::vector<int> perm(2 * n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> out;
    do out.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace

EtaSpace::EtaSpace(int N, int n) : N_(N), n_(n) {
    std::vector<int> cur;
    nondecreasing(N, n, cur, states_);
    for (int k = 0; k < size(); ++k) lookup_.emplace(key(states_[k]), k);
}

long long EtaSpace::key(const std::vector<int>& v) const {
    long long k = 0;
    for (int s : v) k = k * N_ + s;
    return k;
}

ParticleConfig EtaSpace::config(int idx) const {
    return ParticleConfig::from_sites(N_, states_.at(idx));
}

int EtaSpace::index_sorted(const std::vector<int>& sorted_sites) const {
    if (static_cast<int>(sorted_sites.size()) != n_) return -1;
    auto it = lookup_.find(key(sorted_sites));
    return it == lookup_.end() ? -1 : it->second;
}

int EtaSpace::index(const ParticleConfig& eta) const {
    if (eta.N() != N_) return -1;
    return index_sorted(eta.sorted_sites());
}

LambdaSpace::LambdaSpace(int N, int n) : N_(N), n_(n) {
    const int len = 2 * n;
    std::vector<int> x(len, 0), scratch(N, 0);
    while (true) {
        if (even_multiplicities(x, scratch)) points_.push_back(LatticePoint{x});
        int p = len - 1;
        while (p >= 0 && x[p] == N - 1) x[p--] = 0;
        if (p < 0) break;
        ++x[p];
    }
    for (int k = 0; k < size(); ++k) lookup_.emplace(key(points_[k].coords), k);
}

long long LambdaSpace::key(const std::vector<int>& v) const {
    long long k = 0;
    for (int s : v) k = k * N_ + s;
    return k;
}

int LambdaSpace::index(const LatticePoint& x) const {
    if (static_cast<int>(x.coords.size()) != 2 * n_) return -1;
    for (int c : x.coords)
        if (c < 0 || c >= N_) return -1;
    auto it = lookup_.find(key(x.coords));
    return it == lookup_.end() ? -1 : it->second;
}

std::vector<int> bulk_index_set(int N, double delta) {
    const std::vector<double> g = semicircle_quantiles(N, 0.0);
    std::vector<int> J;
    for (int i = 0; i < N; ++i)
        if (g[i] > -2.0 + delta && g[i] < 2.0 - delta) J.push_back(i);
    return J;
}

ConfigOperator build_generator(GeneratorKind kind, const RealVector& lambda, int n, const GeneratorParams& params) {
    const int N = static_cast<int>(lambda.size());
    check_budget(N, n, params);
    if (kind == GeneratorKind::EtaB) return build_generator(kind, lambda, std::make_shared<EtaSpace>(N, n), nullptr, params);
    return build_generator(kind, lambda, nullptr, std::make_shared<LambdaSpace>(N, n), params);
}

ConfigOperator build_generator(GeneratorKind kind, const RealVector& lambda, std::shared_ptr<const EtaSpace> eta_space,
                               std::shared_ptr<const LambdaSpace> lambda_space, const GeneratorParams& params) {
    const int N = static_cast<int>(lambda.size());
    for (int i = 0; i + 1 < N; ++i)
        if (!(lambda(i + 1) > lambda(i))) throw DegenerateError("generator needs strictly increasing eigenvalues");
    const double scale = params.rate_scale;
    ConfigOperator op;
    op.kind = kind;
    std::vector<Triplet> trip;

    auto c = [&](int i, int j) {
        const double d = lambda(i) - lambda(j);
        return 1.0 / (N * d * d);
    };

    if (kind == GeneratorKind::EtaB) {
        if (!eta_space) throw UsageError("B acts on Omega^n");
        check_budget(N, eta_space->n(), params);
        if (eta_space->N() != N) throw UsageError("state space and eigenvalue count differ");
        op.eta_space = eta_space;
        const int S = eta_space->size();
        for (int s = 0; s < S; ++s) {
            const ParticleConfig eta = eta_space->config(s);
            for (int i = 0; i < N; ++i) {
                if (eta.counts[i] == 0) continue;
                for (int j = 0; j < N; ++j) {
                    if (j == i) continue;
                    ParticleConfig y = eta;
                    --y.counts[i];
                    ++y.counts[j];
                    const double rate = scale * c(i, j) * 2.0 * eta.counts[i] * (1.0 + 2.0 * eta.counts[j]);
                    trip.emplace_back(s, eta_space->index(y), rate);
                }
            }
        }
        op.matrix = assemble(S, trip);
        return op;
    }

    if (!lambda_space) throw UsageError("L, S and A act on Lambda^n");
    const int n = lambda_space->n();
    check_budget(N, n, params);
    if (lambda_space->N() != N) throw UsageError("state space and eigenvalue count differ");
    op.lambda_space = lambda_space;
    const int S = lambda_space->size();

    std::vector<char> inJ(N, 0);
    for (int i : bulk_index_set(N, params.delta)) inJ[i] = 1;
    auto short_range = [&](int i, int j) {
        return inJ[i] && inJ[j] && std::abs(i - j) <= params.ell;
    };

    if (kind == GeneratorKind::LatticeL || kind == GeneratorKind::ShortRangeS) {
        const bool sr = kind == GeneratorKind::ShortRangeS;
        for (int s = 0; s < S; ++s) {
            const LatticePoint& x = lambda_space->point(s);
            const int len = static_cast<int>(x.coords.size());
            for (int a = 0; a < len; ++a)
                for (int b = 0; b < len; ++b) {
                    if (a == b || x.coords[a] != x.coords[b]) continue;
                    const int i = x.coords[a];
                    const int ni = x.multiplicity(i);
                    for (int j = 0; j < N; ++j) {
                        if (j == i || (sr && !short_range(i, j))) continue;
                        LatticePoint y = x;
                        y.coords[a] = j;
                        y.coords[b] = j;
                        const double rate = scale * c(i, j) * (x.multiplicity(j) + 1.0) / (ni - 1.0);
                        trip.emplace_back(s, lambda_space->index(y), rate);
                    }
                }
        }
        op.matrix = assemble(S, trip);
        return op;
    }

    // A: (1/eta) prod_r a^S_{i_r j_r} over disjoint {i} and {j}, slots a_r, b_r all distinct.
    if (!(params.eta > 0.0)) throw DomainError("the A generator needs eta > 0");
    const double eta = params.eta;
    auto a_s = [&](int i, int j) {
        if (!short_range(i, j)) return 0.0;
        const double d = lambda(i) - lambda(j);
        return eta / (N * (d * d + eta * eta));
    };
    const auto pairings = slot_pairings(n);
    std::vector<int> istar(n), jstar(n);
    for (int s = 0; s < S; ++s) {
        const LatticePoint& x = lambda_space->point(s);
        for (const auto& perm : pairings) {
            bool ok = true;
            for (int r = 0; r < n && ok; ++r) {
                ok = x.coords[perm[2 * r]] == x.coords[perm[2 * r + 1]];
                istar[r] = x.coords[perm[2 * r]];
            }
            if (!ok) continue;
            // enumerate j in [N]^n avoiding {i}, with nonzero weight
            std::vector<std::vector<int>> cand(n);
            for (int r = 0; r < n; ++r)
                for (int j = 0; j < N; ++j) {
                    if (std::find(istar.begin(), istar.end(), j) != istar.end()) continue;
                    if (a_s(istar[r], j) > 0.0) cand[r].push_back(j);
                }
            bool empty = false;
            for (const auto& cr : cand) empty = empty || cr.empty();
            if (empty) continue;
            std::vector<std::size_t> pos(n, 0);
            while (true) {
                double w = scale / eta;
                LatticePoint y = x;
                for (int r = 0; r < n; ++r) {
                    jstar[r] = cand[r][pos[r]];
                    w *= a_s(istar[r], jstar[r]);
                    y.coords[perm[2 * r]] = jstar[r];
                    y.coords[perm[2 * r + 1]] = jstar[r];
                }
                trip.emplace_back(s, lambda_space->index(y), w);
                int r = n - 1;
                while (r >= 0 && ++pos[r] == cand[r].size()) pos[r--] = 0;
                if (r < 0) break;
            }
        }
    }
    op.matrix = assemble(S, trip);
    return op;
}

namespace {

RealVector evolve_segment(const RealVector& h, const ConfigOperator& op, double dt, const SemigroupOptions& opt) {
    if (dt <= 0.0) return h;
    const int S = op.size();
    if (S <= opt.dense_limit) {
        const RealMatrix dense = RealMatrix(op.matrix) * dt;
        const RealMatrix e = dense.exp();
        RealVector out = e * h;
        if (!out.allFinite()) throw NumericalError("matrix exponential produced non-finite values");
        return out;
    }
    double maxdiag = 0.0;
    for (int r = 0; r < S; ++r) maxdiag = std::max(maxdiag, std::abs(op.matrix.coeff(r, r)));
    const double hmax = maxdiag > 0.0 ? opt.rk4_safety / maxdiag : dt;
    const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(dt / hmax)));
    if (steps > 100000000LL) throw NumericalError("generator too stiff for explicit integration", hmax);
    const double k = dt / steps;
    RealVector v = h;
    for (long long s = 0; s < steps; ++s) {
        const RealVector k1 = op.matrix * v;
        const RealVector k2 = op.matrix * (v + 0.5 * k * k1);
        const RealVector k3 = op.matrix * (v + 0.5 * k * k2);
        const RealVector k4 = op.matrix * (v + k * k3);
        v += (k / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!v.allFinite()) throw NumericalError("explicit integration diverged", k);
    return v;
}

}  // namespace

RealVector evolve_semigroup(const RealVector& h0, const GeneratorPath& path, double s, double t,
                            const SemigroupOptions& opt) {
    if (path.ops.empty() || path.times.size() != path.ops.size() + 1)
        throw UsageError("generator path needs one operator per interval");
    if (t < s) throw DomainError("semigroup evolution needs s <= t");
    if (s < path.times.front() || t > path.times.back()) throw DomainError("evolution window outside the generator path");
    for (const auto& op : path.ops)
        if (op.size() != h0.size()) throw UsageError("state vector and generator size differ");
    RealVector h = h0;
    for (std::size_t m = 0; m < path.ops.size(); ++m) {
        const double lo = std::max(s, path.times[m]);
        const double hi = std::min(t, path.times[m + 1]);
        if (hi > lo) h = evolve_segment(h, path.ops[m], hi - lo, opt);
    }
    return h;
}

DirichletComparison dirichlet_compare(const RealVector& h, const ConfigOperator& s, const ConfigOperator& a) {
    if (!s.lambda_space || !a.lambda_space || s.lambda_space->size() != a.lambda_space->size())
        throw UsageError("Dirichlet comparison needs operators on the same Lambda^n");
    if (s.kind != GeneratorKind::ShortRangeS && s.kind != GeneratorKind::LatticeL)
        throw UsageError("first operator must be L or S");
    if (a.kind != GeneratorKind::ProductA) throw UsageError("second operator must be A");
    if (h.size() != s.size()) throw UsageError("function and state space size differ");
    const RealVector sh = s.apply(h);
    const RealVector ah = a.apply(h);
    DirichletComparison d;
    for (int x = 0; x < s.size(); ++x) {
        d.form_s += static_cast<double>(config_measure_pi(s.lambda_space->point(x))) * h(x) * sh(x);
        d.form_a += h(x) * ah(x);
    }
    d.ratio = d.form_a != 0.0 ? d.form_s / d.form_a : 0.0;
    return d;
}

}  // namespace rmt
