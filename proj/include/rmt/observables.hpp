#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "rmt/types.hpp"

namespace rmt {

// Deterministic test matrix A with its traceless part and cached norms.
// Real entries; non-symmetric matrices arise only from rank_one_iso.
class Observable {
public:
    Observable() = default;

    const RealMatrix& matrix() const { return a_; }
    const RealMatrix& centered() const { return centered_; }
    double trace_avg() const { return trace_avg_; }
    double hs2() const { return hs2_; }        // <|A - <A>|^2>
    double opnorm() const { return opnorm_; }  // largest singular value of the traceless part
    std::optional<double> alpha() const { return alpha_; }
    bool self_adjoint() const { return self_adjoint_; }
    int dim() const { return static_cast<int>(a_.rows()); }
    bool is_traceless(double tol = 1e-12) const;

    // Traceless observable (A + A^T)/2; the symmetric stand-in for rank_one_iso.
    Observable hermitized() const;

    friend Observable traceless(const RealMatrix& a);
    friend Observable make_alpha_mesoscopic(int N, double alpha, std::uint64_t seed);
    friend Observable rank_one_iso(const RealVector& x, const RealVector& y);

private:
    static Observable build(RealMatrix a, bool self_adjoint);

    RealMatrix a_;
    RealMatrix centered_;
    double trace_avg_ = 0.0;
    double hs2_ = 0.0;
    double opnorm_ = 0.0;
    std::optional<double> alpha_;
    bool self_adjoint_ = true;
};

Observable traceless(const RealMatrix& a);
Observable identity_observable(int N);

// Haar-rotated spectrum with R = 2*round(N^alpha / 2) values +-c, hs2 = 1.
// The tag alpha() holds the realized exponent ln R / ln N.
Observable make_alpha_mesoscopic(int N, double alpha, std::uint64_t seed);

// Indicator of S (0-based indices).
Observable coordinate_projector(int N, std::span<const int> S);

// N y x^T - <x, y> I
Observable rank_one_iso(const RealVector& x, const RealVector& y);

// Largest singular value.
double operator_norm(const RealMatrix& a);

}  // namespace rmt
