#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rmt/random.hpp"
#include "rmt/types.hpp"

namespace rmt {

enum class DistributionKind { Gaussian, Rademacher, Uniform, Table };

// Standardized scalar law (mean 0, variance 1). The diagonal law is rescaled
// by the class variance (2 for real, 1 for complex) at sampling time.
struct ScalarDistribution {
    DistributionKind kind = DistributionKind::Gaussian;
    std::vector<std::pair<double, double>> table;  // (value, weight) for Table

    static ScalarDistribution named(const std::string& name);
    static ScalarDistribution from_table(std::vector<std::pair<double, double>> atoms);
    std::string name() const;
    bool is_gaussian() const { return kind == DistributionKind::Gaussian; }
    double moment(int k) const;  // exact k-th moment

    double draw(Rng& rng) const;
};

struct EnsembleSpec {
    int N = 2;
    Symmetry symmetry = Symmetry::Real;
    ScalarDistribution offdiag;
    ScalarDistribution diag;
    std::uint64_t seed = 0;

    int beta() const { return beta_of(symmetry); }
    static EnsembleSpec goe(int N, std::uint64_t seed);
    static EnsembleSpec gue(int N, std::uint64_t seed);
    static EnsembleSpec real_named(int N, const std::string& dist, std::uint64_t seed);
    EnsembleSpec with_seed(std::uint64_t s) const;
};

struct WignerSample {
    EnsembleSpec spec;
    SelfAdjointMatrix matrix;
    double time = 0.0;     // accumulated Brownian flow time; E|w_ab|^2 = (1+time)/N
    double ou_time = 0.0;  // accumulated OU flow time (variance preserving)

    int dim() const;
    bool is_real() const { return std::holds_alternative<RealMatrix>(matrix); }
    const RealMatrix& real() const;
    const ComplexMatrix& complex() const;
};

WignerSample sample_wigner(const EnsembleSpec& spec);
// Draws with an explicit stream (spec.seed is recorded but not used).
WignerSample sample_wigner(const EnsembleSpec& spec, Rng& rng);

WignerSample brownian_increment(const WignerSample& w, double dt, Rng& rng);
WignerSample ou_step(const WignerSample& w, double dt, Rng& rng);

// c(T) = (1 - exp(-T)) / T
double ou_variance_constant(double T);
WignerSample gaussian_interpolate(const WignerSample& w_tilde, const WignerSample& u_goe, double T);

// Sample variance of the strict upper triangle, E|w_ab|^2 estimate.
double offdiag_second_moment(const WignerSample& w);

}  // namespace rmt
