#pragma once

#include "rmt/ensembles.hpp"
#include "rmt/types.hpp"

namespace rmt {

// Ascending eigenvalues with orthonormal eigenvector columns.
struct EigenSystem {
    RealVector lambdas;
    SelfAdjointMatrix vectors;
    double time = 0.0;  // flow-time tag of the source sample

    int dim() const { return static_cast<int>(lambdas.size()); }
    bool is_real() const { return std::holds_alternative<RealMatrix>(vectors); }
    const RealMatrix& real_vectors() const;
    const ComplexMatrix& complex_vectors() const;
};

EigenSystem eigendecompose(const WignerSample& w);
EigenSystem eigendecompose(const RealMatrix& a);
EigenSystem eigendecompose(const ComplexMatrix& a);

RealVector eigenvalues_only(const RealMatrix& a);
RealVector eigenvalues_only(const WignerSample& w);

}  // namespace rmt
