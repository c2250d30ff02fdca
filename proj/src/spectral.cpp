#include "rmt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"

namespace rmt {

namespace {

constexpr double pi = std::numbers::pi;
constexpr int max_confluent_order = 4;

void check_off_support(cplx z) {
    if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0)
        throw DomainError("spectral parameter lies on the support [-2, 2]");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("spectral parameter is not finite");
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

bool same_point(cplx a, cplx b) {
    return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a));
}

// Points on the real axis at the edges are handled as limits from above.
double theta_of(double x) { return std::asin(std::clamp(x / 2.0, -1.0, 1.0)); }

}  // namespace

cplx stieltjes_m(cplx z) {
    check_off_support(z);
    // sqrt(z-2)sqrt(z+2) has its cut on [-2,2] and behaves like z at infinity,
    // so -2/(z+s) is the physical root without cancellation at large |z|.
    const cplx s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
    return -2.0 / (z + s);
}

cplx stieltjes_m_derivative(cplx z, int order) {
    if (order < 0) throw UsageError("negative derivative order");
    std::vector<cplx> d(order + 1);
    d[0] = stieltjes_m(z);
    if (order == 0) return d[0];
    const cplx denom = 2.0 * d[0] + z;
    if (std::abs(denom) == 0.0) throw DomainError("derivative of m at a spectral edge");
    // differentiate m^2 + z m + 1 = 0 k times
    for (int k = 1; k <= order; ++k) {
        cplx acc = static_cast<double>(k) * d[k - 1];
        for (int j = 1; j < k; ++j) acc += binomial(k, j) * d[j] * d[k - j];
        d[k] = -acc / denom;
    }
    return d[order];
}

SpectralPoint SpectralPoint::at(cplx z) {
    auto rd = density_rho_and_distance(z);
    return {z, std::abs(z.imag()), rd.rho, rd.d};
}

double distance_to_support(cplx z) {
    const double x = std::clamp(z.real(), -2.0, 2.0);
    return std::abs(z - cplx(x, 0.0));
}

RhoDistance density_rho_and_distance(cplx z) {
    const cplx m = stieltjes_m(z);
    double rho = std::abs(m.imag());
    if (z.imag() == 0.0) rho = 0.0;
    return {std::min(rho, 1.0), distance_to_support(z)};
}

cplx divided_difference_m(std::span<const cplx> zs) {
    if (zs.empty()) throw DomainError("divided difference of an empty list");
    for (cplx z : zs) check_off_support(z);
    // canonical order so that the result is an exact symmetric function
    std::vector<cplx> p(zs.begin(), zs.end());
    std::sort(p.begin(), p.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    const int l = static_cast<int>(p.size());
    // merge near-equal points so that confluent runs are exact and contiguous
    for (int i = 1; i < l; ++i)
        for (int j = 0; j < i; ++j)
            if (same_point(p[j], p[i])) {
                p[i] = p[j];
                break;
            }
    std::stable_sort(p.begin(), p.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    int longest = 1, run = 1;
    for (int i = 1; i < l; ++i) {
        run = (p[i] == p[i - 1]) ? run + 1 : 1;
        longest = std::max(longest, run);
    }
    if (longest - 1 > max_confluent_order) return divided_difference_m_quadrature(zs);

    std::vector<std::vector<cplx>> derivs(l);
    for (int i = 0; i < l; ++i) {
        if (i > 0 && p[i] == p[i - 1]) {
            derivs[i] = derivs[i - 1];
            continue;
        }
        derivs[i].resize(longest);
        for (int k = 0; k < longest; ++k) derivs[i][k] = stieltjes_m_derivative(p[i], k);
    }
    // column-wise Newton table: col[i] = m[p_i, ..., p_{i+k}]
    std::vector<cplx> col(l);
    for (int i = 0; i < l; ++i) col[i] = derivs[i][0];
    double factorial = 1.0;
    for (int k = 1; k < l; ++k) {
        factorial *= k;
        for (int i = 0; i + k < l; ++i) {
            if (p[i + k] == p[i]) {
                col[i] = derivs[i][k] / factorial;
            } else {
                col[i] = (col[i + 1] - col[i]) / (p[i + k] - p[i]);
            }
        }
    }
    return col[0];
}

cplx divided_difference_m_quadrature(std::span<const cplx> zs, double rel_tol) {
    if (zs.empty()) throw DomainError("divided difference of an empty list");
    std::vector<KernelFactor> f;
    for (cplx z : zs) f.push_back({z, KernelKind::Plain});
    return weighted_semicircle_integral(f, rel_tol);
}

cplx kernel_value(const KernelFactor& f, double x) {
    const cplx r = 1.0 / (x - f.z);
    switch (f.kind) {
        case KernelKind::Plain: return r;
        case KernelKind::Abs: return 1.0 / std::abs(x - f.z);
        case KernelKind::Im: return r.imag();
    }
    return r;
}

cplx weighted_semicircle_integral(std::span<const KernelFactor> factors, double rel_tol) {
    if (factors.empty()) throw DomainError("weighted integral needs at least one factor");
    for (const auto& f : factors) check_off_support(f.z);
    std::vector<KernelFactor> fs(factors.begin(), factors.end());
    // x = 2 sin(theta): rho_sc(x) dx = (2/pi) cos^2(theta) dtheta
    auto integrand = [&fs](double th) -> cplx {
        const double c = std::cos(th);
        const double x = 2.0 * std::sin(th);
        cplx v = (2.0 / pi) * c * c;
        for (const auto& f : fs) v *= kernel_value(f, x);
        return v;
    };
    std::vector<double> cuts;
    const int uniform = 16;
    for (int j = 1; j < uniform; ++j) cuts.push_back(-pi / 2 + pi * j / uniform);
    for (const auto& f : fs) {
        const double x = f.z.real();
        if (std::abs(x) < 2.0) {
            // cluster breakpoints around the near-singular point
            const double eta = std::max(std::abs(f.z.imag()), 1e-14);
            for (double s : {-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0})
                cuts.push_back(theta_of(x + s * eta));
        }
    }
    auto r = integrate_adaptive(integrand, -pi / 2, pi / 2, rel_tol, 1e-300, cuts);
    return r.value;
}

double semicircle_density(double x, double t) {
    const double s = std::sqrt(1.0 + t);
    const double y = x / s;
    if (std::abs(y) >= 2.0) return 0.0;
    return std::sqrt(4.0 - y * y) / (2.0 * pi) / s;
}

double semicircle_cdf(double x) {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(x / 2.0) / pi;
}

double semicircle_quantile(int i, int N, double t) {
    if (N < 1 || i < 1 || i > N) throw DomainError("quantile index out of range");
    if (t < 0.0) throw DomainError("negative time");
    const double s = std::sqrt(1.0 + t);
    if (i == N) return 2.0 * s;
    if (2 * i == N) return 0.0;
    const double target = static_cast<double>(i) / N;
    double lo = -2.0, hi = 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (semicircle_cdf(mid) < target) lo = mid; else hi = mid;
    }
    return s * 0.5 * (lo + hi);
}

std::vector<double> semicircle_quantiles(int N, double t) {
    std::vector<double> g(N);
    for (int i = 1; i <= N; ++i) g[i - 1] = semicircle_quantile(i, N, t);
    return g;
}

}  // namespace rmt
