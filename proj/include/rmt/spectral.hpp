#pragma once

#include <span>
#include <vector>

#include "rmt/types.hpp"

namespace rmt {

// Semicircle Stieltjes transform: root of m^2 + z m + 1 = 0 with Im m * Im z > 0,
// or |m| < 1 for real z outside [-2, 2].
cplx stieltjes_m(cplx z);

// k-th derivative of m at z, k >= 0.
cplx stieltjes_m_derivative(cplx z, int order);

struct SpectralPoint {
    cplx z;
    double eta = 0.0;
    double rho = 0.0;
    double d = 0.0;

    static SpectralPoint at(cplx z);
};

struct RhoDistance {
    double rho;
    double d;
};

RhoDistance density_rho_and_distance(cplx z);
double distance_to_support(cplx z);

// m[z_1, ..., z_l]. Newton table with confluent entries from derivatives of m
// (up to fourth order); deeper confluency goes to quadrature.
cplx divided_difference_m(std::span<const cplx> zs);
cplx divided_difference_m_quadrature(std::span<const cplx> zs, double rel_tol = 1e-10);

enum class KernelKind { Plain, Abs, Im };

struct KernelFactor {
    cplx z;
    KernelKind kind = KernelKind::Plain;
};

// Evaluates one factor g(x) of a weighted integral.
cplx kernel_value(const KernelFactor& f, double x);

// \int rho_sc(x) prod_i g_i(x) dx with g = 1/(x-z), 1/|x-z| or Im 1/(x-z).
cplx weighted_semicircle_integral(std::span<const KernelFactor> factors, double rel_tol = 1e-8);

double semicircle_density(double x, double t = 0.0);
double semicircle_cdf(double x);

// gamma_i(t): the i/N quantile of the semicircle of variance 1+t.
double semicircle_quantile(int i, int N, double t = 0.0);
std::vector<double> semicircle_quantiles(int N, double t = 0.0);

}  // namespace rmt
