#include <doctest.h>

#include <cmath>

#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"

using namespace rmt;

namespace {

std::vector<double> upper(const RealMatrix& a) {
    std::vector<double> v;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j) v.push_back(a(i, j));
    return v;
}

double mean_pow(const std::vector<double>& v, int p) {
    double s = 0.0;
    for (double x : v) s += std::pow(x, p);
    return s / v.size();
}

}  // namespace

TEST_SUITE("ensembles") {

TEST_CASE("sampling is deterministic under the seed") {
    const auto a = sample_wigner(EnsembleSpec::goe(2, 77));
    const auto b = sample_wigner(EnsembleSpec::goe(2, 77));
    CHECK(a.real() == b.real());
    const auto c = sample_wigner(EnsembleSpec::goe(2, 78));
    CHECK(a.real() != c.real());
}

TEST_CASE("real samples are exactly symmetric; complex samples exactly Hermitian") {
    const auto a = sample_wigner(EnsembleSpec::real_named(60, "uniform", 3));
    CHECK(a.real() == a.real().transpose());
    const auto b = sample_wigner(EnsembleSpec::gue(60, 3));
    CHECK(b.complex() == b.complex().adjoint());
}

TEST_CASE("rademacher off-diagonal variance is 1/N") {
    const int N = 1000;
    const auto w = sample_wigner(EnsembleSpec::real_named(N, "rademacher", 9));
    CHECK(std::abs(offdiag_second_moment(w) * N - 1.0) <= 3.0 * std::sqrt(2.0 / (N * N / 2.0)) * N / N + 1e-12);
    for (double x : upper(w.real())) REQUIRE(std::abs(std::abs(x) - 1.0 / std::sqrt(N)) < 1e-15);
}

TEST_CASE("complex entries have E w^2 = 0") {
    const int N = 500;
    const auto w = sample_wigner(EnsembleSpec::gue(N, 4));
    cplx s = 0.0;
    int M = 0;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            s += w.complex()(i, j) * w.complex()(i, j);
            ++M;
        }
    s /= M;
    const double se = 1.0 / N / std::sqrt(static_cast<double>(M));
    CHECK(std::abs(s) < 5.0 * se);
    CHECK(offdiag_second_moment(w) * N == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("unknown or invalid distributions are config errors") {
    CHECK_THROWS_AS(ScalarDistribution::named("cauchy"), ConfigError);
    CHECK_THROWS_AS(ScalarDistribution::from_table({{1.0, 0.5}, {0.0, 0.5}}), ConfigError);
    CHECK_NOTHROW(ScalarDistribution::from_table({{2.0, 0.2}, {-0.5, 0.8}}));
}

TEST_CASE("uniform law is standardized over 1e6 draws") {
    const auto d = ScalarDistribution::named("uniform");
    Rng rng = make_rng(1, 2);
    double s1 = 0.0, s2 = 0.0;
    const int M = 1000000;
    for (int k = 0; k < M; ++k) {
        const double x = d.draw(rng);
        s1 += x;
        s2 += x * x;
    }
    s1 /= M;
    s2 /= M;
    CHECK(std::abs(s1) < 4.0 / std::sqrt(M));
    // Var(x^2) = E x^4 - 1 = 1.8 - 1 for the standardized uniform law
    CHECK(std::abs(s2 - 1.0) < 4.0 * std::sqrt(0.8 / M));
    CHECK(d.moment(4) == doctest::Approx(1.8));
}

TEST_CASE("brownian increments accumulate variance (1 + t)/N") {
    const int N = 200;
    auto w = sample_wigner(EnsembleSpec::goe(N, 5));
    Rng rng = make_rng(5, 1);
    for (int s = 0; s < 10; ++s) w = brownian_increment(w, 0.1, rng);
    CHECK(w.time == doctest::Approx(1.0));
    CHECK(w.real() == w.real().transpose());
    const double M = N * (N - 1) / 2.0;
    CHECK(std::abs(offdiag_second_moment(w) * N - 2.0) < 4.0 * 2.0 * std::sqrt(2.0 / M));
    Rng r2 = make_rng(5, 2);
    const auto still = brownian_increment(w, 1e-300, r2);
    CHECK(still.real() == w.real());
}

TEST_CASE("OU flow keeps the GOE variance") {
    const int N = 100;
    auto w = sample_wigner(EnsembleSpec::goe(N, 6));
    Rng rng = make_rng(6, 1);
    for (int s = 0; s < 1000; ++s) w = ou_step(w, 1e-3, rng);
    CHECK(w.ou_time == doctest::Approx(1.0));
    const double M = N * (N - 1) / 2.0;
    CHECK(std::abs(offdiag_second_moment(w) * N - 1.0) < 4.0 * std::sqrt(2.0 / M) + 2e-3);
    WignerSample z = w;
    z.matrix = RealMatrix(RealMatrix::Zero(N, N));
    Rng a = make_rng(7, 0), b = make_rng(7, 0);
    CHECK(ou_step(z, 0.01, a).real() == ou_step(z, 0.01, b).real());
}

TEST_CASE("gaussian interpolation") {
    CHECK(ou_variance_constant(0.5) == doctest::Approx((1.0 - std::exp(-0.5)) / 0.5));
    const int N = 500;
    EnsembleSpec skew = EnsembleSpec::goe(N, 8);
    skew.offdiag = ScalarDistribution::from_table({{2.0, 0.2}, {-0.5, 0.8}});
    const auto wt = sample_wigner(skew);
    const auto u = sample_wigner(EnsembleSpec::goe(N, 9));
    const double T = 0.5;
    const auto out = gaussian_interpolate(wt, u, T);
    const auto v = upper(out.real());
    const double M = static_cast<double>(v.size());
    CHECK(std::abs(mean_pow(v, 2) * N - 1.0) < 4.0 * std::sqrt(3.0 / M));
    const double third = mean_pow(v, 3) * std::pow(N, 1.5);
    const double expected = std::pow(1.0 - ou_variance_constant(T) * T, 1.5) * 1.5;
    CHECK(std::abs(third - expected) < 4.0 * std::sqrt(15.0 / M));
    const auto near = gaussian_interpolate(wt, u, 1e-12);
    CHECK((near.real() - wt.real()).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS_AS(gaussian_interpolate(wt, sample_wigner(EnsembleSpec::goe(10, 1)), T), UsageError);
    CHECK_THROWS_AS(gaussian_interpolate(u, wt, T), UsageError);
}

}
