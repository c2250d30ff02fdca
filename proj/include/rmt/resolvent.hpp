#pragma once

#include <map>
#include <optional>
#include <vector>

#include "rmt/eigensystem.hpp"
#include "rmt/observables.hpp"
#include "rmt/spectral.hpp"

namespace rmt {

struct ChainLink {
    cplx z;
    KernelKind kind = KernelKind::Plain;
};

// Consecutive resolvent factors with no observable in between.
using ChainGroup = std::vector<ChainLink>;

enum class ChainMode { Averaged, Isotropic };

// Averaged:  < g_1 A_1 g_2 A_2 ... g_k A_k >          (#groups == #observables)
// Isotropic: < x, g_1 A_1 ... A_k g_{k+1} y >          (#groups == #observables + 1)
// Observables are non-owning and must outlive the descriptor.
struct ChainDescriptor {
    ChainMode mode = ChainMode::Averaged;
    std::vector<ChainGroup> groups;
    std::vector<const Observable*> observables;

    static ChainDescriptor averaged(std::vector<ChainGroup> groups,
                                    std::vector<const Observable*> obs);
    static ChainDescriptor isotropic(std::vector<ChainGroup> groups,
                                     std::vector<const Observable*> obs);
    // one plain link per group
    static ChainDescriptor averaged_plain(const std::vector<cplx>& zs,
                                          std::vector<const Observable*> obs);
    static ChainDescriptor isotropic_plain(const std::vector<cplx>& zs,
                                           std::vector<const Observable*> obs);

    void validate() const;
    int k() const { return static_cast<int>(observables.size()); }
    bool all_plain() const;
    double eta() const;  // min |Im z| over links
    double rho() const;  // max |Im m(z)| over links
    double d() const;    // min distance to [-2, 2] over links
};

// Per-thread cache of observables rotated into the eigenbasis.
class EigenbasisView {
public:
    explicit EigenbasisView(const EigenSystem& eig) : eig_(&eig) {}

    const EigenSystem& system() const { return *eig_; }
    const AnyMatrix& transformed(const Observable& a);
    const ComplexVector& transformed_diagonal(const Observable& a);
    ComplexVector to_eigenbasis(const ComplexVector& x) const;  // U^* x

private:
    const EigenSystem* eig_;
    std::map<const Observable*, AnyMatrix> full_;
    std::map<const Observable*, ComplexVector> diag_;
};

// Diagonal kernel prod_links f(lambda_i) of one group.
ComplexVector group_kernel(const RealVector& lambdas, const ChainGroup& g);

cplx chain_average(EigenbasisView& view, const ChainDescriptor& chain);
cplx chain_average(const EigenSystem& eig, const ChainDescriptor& chain);
cplx chain_isotropic(EigenbasisView& view, const ChainDescriptor& chain, const ComplexVector& x,
                     const ComplexVector& y);
cplx chain_isotropic(const EigenSystem& eig, const ChainDescriptor& chain, const ComplexVector& x,
                     const ComplexVector& y);

// Deterministic value of one group: m[z_1..z_l] for plain groups, weighted integral otherwise.
cplx group_deterministic_value(const ChainGroup& g);

// prod over groups of the group value, times <A_1...A_k> or <x, A_1...A_k y>.
cplx deterministic_chain_value(const ChainDescriptor& chain,
                               const ComplexVector* x = nullptr, const ComplexVector* y = nullptr);

// Normalized error statistic Psi for averaged or isotropic chains of plain links.
double psi_statistic(EigenbasisView& view, const ChainDescriptor& chain,
                     const ComplexVector* x = nullptr, const ComplexVector* y = nullptr);
double psi_statistic(const EigenSystem& eig, const ChainDescriptor& chain,
                     const ComplexVector* x = nullptr, const ComplexVector* y = nullptr);

// <A_1 ... A_k> and <x, A_1 ... A_k y> for the chain's observables.
cplx observable_trace_product(const std::vector<const Observable*>& obs);
cplx observable_form_product(const std::vector<const Observable*>& obs, const ComplexVector& x,
                             const ComplexVector& y);

// Max-entry norm of G - m + m underline(WG) - m<G-m>G - m G^2/N (zero in exact arithmetic).
// With with_correction = false the last term is dropped.
double underline_identity_residual(const WignerSample& w, cplx z, bool with_correction = true);

// ||G G^* - Im G / eta||_max with G assembled from the eigendecomposition.
double ward_residual(const EigenSystem& eig, cplx z);

// ||G(z)|| = 1 / min_i |lambda_i - z|
double resolvent_norm(const RealVector& lambdas, cplx z);

}  // namespace rmt
