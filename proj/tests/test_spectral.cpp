#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/spectral.hpp"

using namespace rmt;
using namespace std::complex_literals;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("m at i matches the frozen oracle") {
    const cplx m = stieltjes_m(1i);
    CHECK(std::abs(m - cplx(0.0, 0.618033988749894848)) < 1e-15);
}

TEST_CASE("m at the edge and at large z") {
    CHECK(std::abs(stieltjes_m(cplx(2.0, 1e-14)) - cplx(-1.0, 0.0)) < 1e-6);
    const cplx z(0.0, 1e6);
    CHECK(rel(stieltjes_m(z), -1.0 / z) < 1e-11);
    CHECK(std::abs(stieltjes_m(5.0) - cplx(-0.208712152522079996706, 0.0)) < 1e-15);
}

TEST_CASE("m on the support is a domain error") {
    CHECK_THROWS_AS(stieltjes_m(0.3), DomainError);
    CHECK_THROWS_AS(stieltjes_m(-2.0), DomainError);
}

TEST_CASE("branch and fixed-point residual over random z") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(-6.0, 6.0), lg(-6.0, 2.0);
    std::bernoulli_distribution sgn;
    for (int k = 0; k < 10000; ++k) {
        const double im = std::pow(10.0, lg(rng)) * (sgn(rng) ? 1.0 : -1.0);
        const cplx z(re(rng), im);
        const cplx m = stieltjes_m(z);
        REQUIRE(m.imag() * z.imag() > 0.0);
        REQUIRE(std::abs(m) <= 1.0 + 1e-15);
        REQUIRE(std::abs(-1.0 / m - m - z) <= 1e-12 * (1.0 + std::abs(z)));
    }
}

TEST_CASE("rho and distance") {
    auto a = density_rho_and_distance(cplx(0.0, 1e-3));
    CHECK(std::abs(a.rho - 1.0) < 1e-3);
    CHECK(a.d == doctest::Approx(1e-3).epsilon(1e-12));
    auto b = density_rho_and_distance(5.0);
    CHECK(b.d == doctest::Approx(3.0));
    CHECK(b.rho == 0.0);
    CHECK(density_rho_and_distance(cplx(3.0, 4.0)).d == doctest::Approx(std::sqrt(17.0)).epsilon(1e-14));
    const SpectralPoint p = SpectralPoint::at(cplx(0.5, -0.2));
    CHECK(p.eta == 0.2);
    CHECK(p.rho >= 0.0);
    CHECK(p.rho <= 1.0);
}

TEST_CASE("derivatives follow m' = m^2 / (1 - m^2)") {
    for (cplx z : {cplx(0.0, 1.0), cplx(1.3, 0.2), cplx(-3.0, 0.5)}) {
        const cplx m = stieltjes_m(z);
        CHECK(rel(stieltjes_m_derivative(z, 1), m * m / (1.0 - m * m)) < 1e-13);
        // finite-difference check on the second derivative
        const double h = 1e-4;
        const cplx fd = (stieltjes_m_derivative(z + h, 1) - stieltjes_m_derivative(z - h, 1)) / (2.0 * h);
        CHECK(rel(stieltjes_m_derivative(z, 2), fd) < 1e-6);
    }
}

TEST_CASE("divided differences match the frozen oracles") {
    const std::vector<cplx> a{1i};
    CHECK(rel(divided_difference_m(a), cplx(0.0, 0.618033988749894848)) < 1e-14);
    const std::vector<cplx> b{1i, 1i};
    CHECK(rel(divided_difference_m(b), cplx(-0.276393202250021030, 0.0)) < 1e-13);
    const std::vector<cplx> c{1i, -1i};
    CHECK(rel(divided_difference_m(c), cplx(0.618033988749894848, 0.0)) < 1e-13);
    const std::vector<cplx> d{1i, cplx(1.0, 1.0), cplx(-1.0, 0.5)};
    CHECK(rel(divided_difference_m(d), cplx(0.000451946307430384346, -0.0996794217484945621)) < 1e-12);
    const std::vector<cplx> e{1i, 1i, 1i};
    CHECK(rel(divided_difference_m(e), cplx(0.0, -0.0894427190999915878563669467492)) < 1e-13);
    const cplx z(0.5, 0.05);
    const std::vector<cplx> f{z, z, std::conj(z)};
    CHECK(rel(divided_difference_m(f), cplx(-1.28961871277449477561, 193.580360136404442689)) < 1e-10);
}

TEST_CASE("divided differences: empty list is a domain error") {
    const std::vector<cplx> none;
    CHECK_THROWS_AS(divided_difference_m(none), DomainError);
}

TEST_CASE("divided differences are permutation invariant and agree with quadrature") {
    std::vector<cplx> zs{cplx(0.3, 0.1), cplx(-1.0, -0.4), cplx(0.3, 0.1), cplx(2.5, 0.02), cplx(0.0, 1.0)};
    const cplx ref = divided_difference_m(zs);
    std::sort(zs.begin(), zs.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
    do {
        REQUIRE(rel(divided_difference_m(zs), ref) < 1e-10);
    } while (std::next_permutation(zs.begin(), zs.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); }));
    CHECK(rel(divided_difference_m_quadrature(zs), ref) < 1e-8);
}

TEST_CASE("deep confluency falls back to quadrature consistently") {
    const cplx z(0.4, 0.6);
    const std::vector<cplx> six(6, z);
    // m[z; 6 times] = m^{(5)}(z) / 5!
    CHECK(rel(divided_difference_m(six), stieltjes_m_derivative(z, 5) / 120.0) < 1e-7);
}

TEST_CASE("weighted integrals") {
    const std::vector<KernelFactor> one{{1i, KernelKind::Plain}};
    CHECK(rel(weighted_semicircle_integral(one), stieltjes_m(1i)) < 1e-8);
    const std::vector<KernelFactor> two{{1i, KernelKind::Plain}, {-1i, KernelKind::Plain}};
    CHECK(rel(weighted_semicircle_integral(two), cplx(0.618033988749894848, 0.0)) < 1e-8);
    const std::vector<KernelFactor> ab{{1i, KernelKind::Abs}};
    CHECK(std::abs(weighted_semicircle_integral(ab) - 0.767789218501712308717918342024) < 1e-9);
    const std::vector<KernelFactor> mixed{{1i, KernelKind::Plain}, {cplx(0.3, 0.2), KernelKind::Abs}};
    CHECK(rel(weighted_semicircle_integral(mixed), cplx(0.212335015339913550323, 1.28805633700343704314)) < 1e-8);
    const std::vector<KernelFactor> im{{cplx(0.5, 0.1), KernelKind::Im}};
    CHECK(std::abs(weighted_semicircle_integral(im) - 0.919621675717284672413) < 1e-8);
}

TEST_CASE("all-plain integrals agree with divided differences for eta >= 1e-2") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> re(-2.5, 2.5), lg(-2.0, 0.5);
    for (int t = 0; t < 40; ++t) {
        const int l = 1 + t % 4;
        std::vector<cplx> zs;
        std::vector<KernelFactor> fs;
        for (int q = 0; q < l; ++q) {
            const cplx z(re(rng), std::pow(10.0, lg(rng)) * (q % 2 ? -1.0 : 1.0));
            zs.push_back(z);
            fs.push_back({z, KernelKind::Plain});
        }
        REQUIRE(rel(weighted_semicircle_integral(fs, 1e-10), divided_difference_m(zs)) < 1e-7);
    }
}

TEST_CASE("adaptive quadrature on a smooth and a singular integrand") {
    auto r = integrate_adaptive([](double x) { return cplx(std::exp(x), 0.0); }, 0.0, 1.0, 1e-13);
    CHECK(std::abs(r.value.real() - (std::exp(1.0) - 1.0)) < 1e-12);
    auto s = integrate_adaptive([](double x) { return cplx(1.0 / std::sqrt(x), 0.0); }, 0.0, 1.0, 1e-9, 0.0, {}, 20000);
    CHECK(std::abs(s.value.real() - 2.0) < 1e-7);
}

TEST_CASE("quantiles") {
    CHECK(semicircle_quantile(5, 10) == 0.0);
    CHECK(semicircle_quantile(10, 10) == 2.0);
    CHECK(std::abs(semicircle_quantile(1, 4) - -0.807945506599034418638) < 1e-10);
    CHECK(std::abs(semicircle_cdf(semicircle_quantile(1, 4)) - 0.25) < 1e-12);
    CHECK(std::abs(semicircle_quantile(3, 10, 0.5) - -0.783081074086707193049) < 1e-10);
    const auto g = semicircle_quantiles(37, 0.3);
    for (int i = 1; i < 37; ++i) REQUIRE(g[i] > g[i - 1]);
    // i/N quantiles: gamma_{N-i} = -gamma_i
    for (int i = 1; i < 37; ++i) REQUIRE(std::abs(g[37 - i - 1] + g[i - 1]) < 1e-9);
    CHECK(g.back() == doctest::Approx(2.0 * std::sqrt(1.3)));
}

TEST_CASE("density of the time-rescaled semicircle is normalized") {
    for (double t : {0.0, 0.5, 2.0}) {
        const double e = 2.0 * std::sqrt(1.0 + t);
        auto r = integrate_adaptive([&](double x) { return cplx(semicircle_density(x, t), 0.0); }, -e, e, 1e-10);
        CHECK(r.value.real() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

}
