#include "rmt/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmt/errors.hpp"

namespace rmt {

namespace {

ComplexVector apply_any(const AnyMatrix& t, const ComplexVector& v) {
    if (const auto* r = std::get_if<RealMatrix>(&t)) {
        const RealVector re = (*r) * v.real();
        const RealVector im = (*r) * v.imag();
        ComplexVector out(v.size());
        out.real() = re;
        out.imag() = im;
        return out;
    }
    return std::get<ComplexMatrix>(t) * v;
}

ComplexMatrix to_complex(const AnyMatrix& t) {
    if (const auto* r = std::get_if<RealMatrix>(&t)) return r->cast<cplx>();
    return std::get<ComplexMatrix>(t);
}

cplx entry(const AnyMatrix& t, int i, int j) {
    if (const auto* r = std::get_if<RealMatrix>(&t)) return (*r)(i, j);
    return std::get<ComplexMatrix>(t)(i, j);
}

void check_link(const ChainLink& l) {
    if (l.z.imag() == 0.0) {
        if (l.kind != KernelKind::Abs || std::abs(l.z.real()) <= 2.0)
            throw DomainError("chain link needs eta > 0");
    }
}

}  // namespace

ChainDescriptor ChainDescriptor::averaged(std::vector<ChainGroup> groups,
                                          std::vector<const Observable*> obs) {
    ChainDescriptor c{ChainMode::Averaged, std::move(groups), std::move(obs)};
    c.validate();
    return c;
}

ChainDescriptor ChainDescriptor::isotropic(std::vector<ChainGroup> groups,
                                           std::vector<const Observable*> obs) {
    ChainDescriptor c{ChainMode::Isotropic, std::move(groups), std::move(obs)};
    c.validate();
    return c;
}

ChainDescriptor ChainDescriptor::averaged_plain(const std::vector<cplx>& zs,
                                                std::vector<const Observable*> obs) {
    std::vector<ChainGroup> g;
    for (cplx z : zs) g.push_back({{z, KernelKind::Plain}});
    return averaged(std::move(g), std::move(obs));
}

ChainDescriptor ChainDescriptor::isotropic_plain(const std::vector<cplx>& zs,
                                                 std::vector<const Observable*> obs) {
    std::vector<ChainGroup> g;
    for (cplx z : zs) g.push_back({{z, KernelKind::Plain}});
    return isotropic(std::move(g), std::move(obs));
}

void ChainDescriptor::validate() const {
    if (groups.empty()) throw UsageError("chain has no resolvent groups");
    for (const auto& g : groups) {
        if (g.empty()) throw UsageError("chain group is empty");
        for (const auto& l : g) check_link(l);
    }
    const std::size_t ng = groups.size(), no = observables.size();
    if (mode == ChainMode::Averaged) {
        if (!(no == ng || (no == 0 && ng == 1)))
            throw UsageError("averaged chain needs one observable per group");
    } else if (no + 1 != ng) {
        throw UsageError("isotropic chain needs one observable fewer than groups");
    }
    int n = -1;
    for (const auto* o : observables) {
        if (o == nullptr) throw UsageError("null observable in chain");
        if (n >= 0 && o->dim() != n) throw UsageError("observables of different dimension");
        n = o->dim();
    }
}

bool ChainDescriptor::all_plain() const {
    for (const auto& g : groups)
        for (const auto& l : g)
            if (l.kind != KernelKind::Plain) return false;
    return true;
}

double ChainDescriptor::eta() const {
    double e = std::numeric_limits<double>::infinity();
    for (const auto& g : groups)
        for (const auto& l : g) e = std::min(e, std::abs(l.z.imag()));
    return e;
}

double ChainDescriptor::rho() const {
    double r = 0.0;
    for (const auto& g : groups)
        for (const auto& l : g) r = std::max(r, density_rho_and_distance(l.z).rho);
    return r;
}

double ChainDescriptor::d() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& g : groups)
        for (const auto& l : g) r = std::min(r, distance_to_support(l.z));
    return r;
}

const AnyMatrix& EigenbasisView::transformed(const Observable& a) {
    auto it = full_.find(&a);
    if (it != full_.end()) return it->second;
    const int N = eig_->dim();
    if (a.dim() != N) throw UsageError("observable dimension does not match the eigensystem");
    AnyMatrix t;
    if (a.hs2() == 0.0 && a.self_adjoint()) {
        // multiple of the identity
        if (eig_->is_real()) t = RealMatrix(a.trace_avg() * RealMatrix::Identity(N, N));
        else t = ComplexMatrix(a.trace_avg() * ComplexMatrix::Identity(N, N));
    } else if (eig_->is_real()) {
        const RealMatrix& u = eig_->real_vectors();
        RealMatrix au = a.matrix() * u;
        t = RealMatrix(u.transpose() * au);
    } else {
        const ComplexMatrix& u = eig_->complex_vectors();
        ComplexMatrix au = a.matrix().cast<cplx>() * u;
        t = ComplexMatrix(u.adjoint() * au);
    }
    return full_.emplace(&a, std::move(t)).first->second;
}

const ComplexVector& EigenbasisView::transformed_diagonal(const Observable& a) {
    auto it = diag_.find(&a);
    if (it != diag_.end()) return it->second;
    const int N = eig_->dim();
    if (a.dim() != N) throw UsageError("observable dimension does not match the eigensystem");
    ComplexVector d(N);
    auto f = full_.find(&a);
    if (f != full_.end()) {
        for (int i = 0; i < N; ++i) d(i) = entry(f->second, i, i);
    } else if (a.hs2() == 0.0 && a.self_adjoint()) {
        d.setConstant(a.trace_avg());
    } else if (eig_->is_real()) {
        const RealMatrix& u = eig_->real_vectors();
        RealMatrix au = a.matrix() * u;
        d = u.cwiseProduct(au).colwise().sum().transpose().cast<cplx>();
    } else {
        const ComplexMatrix& u = eig_->complex_vectors();
        ComplexMatrix au = a.matrix().cast<cplx>() * u;
        d = u.conjugate().cwiseProduct(au).colwise().sum().transpose();
    }
    return diag_.emplace(&a, std::move(d)).first->second;
}

ComplexVector EigenbasisView::to_eigenbasis(const ComplexVector& x) const {
    if (x.size() != eig_->dim()) throw UsageError("vector length does not match the eigensystem");
    if (eig_->is_real()) {
        const RealMatrix& u = eig_->real_vectors();
        ComplexVector out(x.size());
        out.real() = u.transpose() * x.real();
        out.imag() = u.transpose() * x.imag();
        return out;
    }
    return eig_->complex_vectors().adjoint() * x;
}

ComplexVector group_kernel(const RealVector& lambdas, const ChainGroup& g) {
    ComplexVector d = ComplexVector::Ones(lambdas.size());
    for (const auto& l : g)
        for (Eigen::Index i = 0; i < lambdas.size(); ++i) d(i) *= kernel_value({l.z, l.kind}, lambdas(i));
    return d;
}

cplx chain_average(EigenbasisView& view, const ChainDescriptor& chain) {
    chain.validate();
    if (chain.mode != ChainMode::Averaged) throw UsageError("chain_average needs an averaged chain");
    const RealVector& lam = view.system().lambdas;
    const int N = view.system().dim();
    const int k = chain.k();
    std::vector<ComplexVector> d;
    for (const auto& g : chain.groups) d.push_back(group_kernel(lam, g));
    if (k == 0) return d[0].mean();
    if (k == 1) {
        const ComplexVector& t = view.transformed_diagonal(*chain.observables[0]);
        return d[0].cwiseProduct(t).sum() / static_cast<double>(N);
    }
    if (k == 2) {
        const AnyMatrix& t1 = view.transformed(*chain.observables[0]);
        const AnyMatrix& t2 = view.transformed(*chain.observables[1]);
        cplx acc = 0.0;
        std::visit(
            [&](const auto& a, const auto& b) {
                for (int j = 0; j < N; ++j) {
                    cplx col = 0.0;
                    for (int i = 0; i < N; ++i) col += d[0](i) * a(i, j) * b(j, i);
                    acc += col * d[1](j);
                }
            },
            t1, t2);
        return acc / static_cast<double>(N);
    }
    ComplexMatrix m = d[0].asDiagonal() * to_complex(view.transformed(*chain.observables[0]));
    for (int j = 1; j + 1 < k; ++j) {
        ComplexMatrix next = d[j].asDiagonal() * to_complex(view.transformed(*chain.observables[j]));
        m = m * next;
    }
    // trace of m * diag(d_k) * T_k without forming the last product
    const AnyMatrix& last = view.transformed(*chain.observables[k - 1]);
    cplx acc = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) acc += m(i, j) * d[k - 1](j) * entry(last, j, i);
    return acc / static_cast<double>(N);
}

cplx chain_average(const EigenSystem& eig, const ChainDescriptor& chain) {
    EigenbasisView v(eig);
    return chain_average(v, chain);
}

cplx chain_isotropic(EigenbasisView& view, const ChainDescriptor& chain, const ComplexVector& x,
                     const ComplexVector& y) {
    chain.validate();
    if (chain.mode != ChainMode::Isotropic)
        throw UsageError("chain_isotropic needs an isotropic chain");
    if (x.norm() == 0.0 || y.norm() == 0.0) throw UsageError("isotropic chain with a zero vector");
    const RealVector& lam = view.system().lambdas;
    const int k = chain.k();
    ComplexVector v = group_kernel(lam, chain.groups[k]).cwiseProduct(view.to_eigenbasis(y));
    for (int j = k - 1; j >= 0; --j) {
        v = apply_any(view.transformed(*chain.observables[j]), v);
        v = group_kernel(lam, chain.groups[j]).cwiseProduct(v);
    }
    return view.to_eigenbasis(x).dot(v);
}

cplx chain_isotropic(const EigenSystem& eig, const ChainDescriptor& chain, const ComplexVector& x,
                     const ComplexVector& y) {
    EigenbasisView v(eig);
    return chain_isotropic(v, chain, x, y);
}

cplx group_deterministic_value(const ChainGroup& g) {
    bool plain = std::all_of(g.begin(), g.end(),
                             [](const ChainLink& l) { return l.kind == KernelKind::Plain; });
    if (plain) {
        std::vector<cplx> zs;
        for (const auto& l : g) zs.push_back(l.z);
        return divided_difference_m(zs);
    }
    std::vector<KernelFactor> f;
    for (const auto& l : g) f.push_back({l.z, l.kind});
    return weighted_semicircle_integral(f);
}

cplx observable_trace_product(const std::vector<const Observable*>& obs) {
    if (obs.empty()) return 1.0;
    const int N = obs[0]->dim();
    if (obs.size() == 1) return obs[0]->trace_avg();
    if (obs.size() == 2) {
        return obs[0]->matrix().cwiseProduct(obs[1]->matrix().transpose()).sum() /
               static_cast<double>(N);
    }
    RealMatrix p = obs[0]->matrix();
    for (std::size_t j = 1; j + 1 < obs.size(); ++j) p = p * obs[j]->matrix();
    return p.cwiseProduct(obs.back()->matrix().transpose()).sum() / static_cast<double>(N);
}

cplx observable_form_product(const std::vector<const Observable*>& obs, const ComplexVector& x,
                             const ComplexVector& y) {
    ComplexVector v = y;
    for (auto it = obs.rbegin(); it != obs.rend(); ++it)
        v = apply_any(AnyMatrix((*it)->matrix()), v);
    return x.dot(v);
}

cplx deterministic_chain_value(const ChainDescriptor& chain, const ComplexVector* x,
                               const ComplexVector* y) {
    chain.validate();
    cplx val = 1.0;
    for (const auto& g : chain.groups) val *= group_deterministic_value(g);
    if (chain.mode == ChainMode::Averaged) return val * observable_trace_product(chain.observables);
    if (x == nullptr || y == nullptr) throw UsageError("isotropic chain needs vectors x and y");
    return val * observable_form_product(chain.observables, *x, *y);
}

double psi_statistic(EigenbasisView& view, const ChainDescriptor& chain, const ComplexVector* x,
                     const ComplexVector* y) {
    chain.validate();
    if (!chain.all_plain()) throw UsageError("psi statistic needs plain links");
    double hs = 1.0;
    for (const auto* o : chain.observables) {
        if (!o->is_traceless(1e-10)) throw UsageError("psi statistic needs traceless observables");
        hs *= std::sqrt(o->hs2());
    }
    const double N = view.system().dim();
    const double K = chain.k();
    const double eta = chain.eta(), rho = chain.rho();
    if (chain.mode == ChainMode::Averaged) {
        const cplx err = chain_average(view, chain) - deterministic_chain_value(chain);
        if (chain.k() == 0) return N * eta * std::abs(err);
        return std::pow(N, (3.0 - K) / 2.0) * std::sqrt(eta / rho) / hs * std::abs(err);
    }
    if (x == nullptr || y == nullptr) throw UsageError("isotropic psi needs vectors x and y");
    const cplx err = chain_isotropic(view, chain, *x, *y) - deterministic_chain_value(chain, x, y);
    return std::pow(N, (1.0 - K) / 2.0) * std::sqrt(eta / rho) / (x->norm() * y->norm() * hs) *
           std::abs(err);
}

double psi_statistic(const EigenSystem& eig, const ChainDescriptor& chain, const ComplexVector* x,
                     const ComplexVector* y) {
    EigenbasisView v(eig);
    return psi_statistic(v, chain, x, y);
}

double underline_identity_residual(const WignerSample& w, cplx z, bool with_correction) {
    if (!w.is_real()) throw UsageError("underline identity is implemented for the real class");
    if (z.imag() == 0.0) throw DomainError("underline identity needs eta > 0");
    const RealMatrix& W = w.real();
    const int N = w.dim();
    const double n = N;
    ComplexMatrix h = W.cast<cplx>();
    h.diagonal().array() -= z;
    const ComplexMatrix G = h.partialPivLu().inverse();
    const cplx m = stieltjes_m(z);
    const cplx avg = G.trace() / n;
    // W G with a real left factor
    ComplexMatrix WG(N, N);
    WG.real() = W * G.real();
    WG.imag() = W * G.imag();
    const ComplexMatrix GG = G * G;
    const ComplexMatrix GtG = G.transpose() * G;
    const ComplexMatrix under = WG + avg * G + GtG / n;
    ComplexMatrix R = G + m * under - m * (avg - m) * G;
    R.diagonal().array() -= m;
    if (with_correction) R -= m * GG / n;
    return R.cwiseAbs().maxCoeff();
}

double ward_residual(const EigenSystem& eig, cplx z) {
    const double eta = std::abs(z.imag());
    if (eta == 0.0) throw DomainError("Ward identity needs eta > 0");
    const int N = eig.dim();
    ComplexVector g(N);
    for (int i = 0; i < N; ++i) g(i) = 1.0 / (eig.lambdas(i) - z);
    ComplexMatrix U = eig.is_real() ? ComplexMatrix(eig.real_vectors().cast<cplx>())
                                    : eig.complex_vectors();
    const ComplexMatrix G = U * g.asDiagonal() * U.adjoint();
    const ComplexMatrix lhs = G * G.adjoint();
    // Im G / eta with the sign of Im z folded in
    const ComplexMatrix img = (G - G.adjoint()) / cplx(0.0, 2.0 * z.imag());
    return (lhs - img).cwiseAbs().maxCoeff();
}

double resolvent_norm(const RealVector& lambdas, cplx z) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lambdas.size(); ++i)
        dmin = std::min(dmin, std::abs(lambdas(i) - z));
    return 1.0 / dmin;
}

}  // namespace rmt
