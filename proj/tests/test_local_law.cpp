#include <doctest.h>

#include <cmath>

#include "rmt/errors.hpp"
#include "rmt/local_law.hpp"
#include "rmt/spectral.hpp"

using namespace rmt;

namespace {

ErrorRecord synthetic(int N, double eta, double error) {
    ErrorRecord r;
    r.N = N;
    r.eta = eta;
    r.k = 1;
    r.alpha = 1.0;
    r.error = error;
    return r;
}

SweepConfig small_config() {
    SweepConfig c;
    c.Ns = {64};
    c.etas = {0.5};
    c.energies = {0.0};
    c.ks = {1, 2};
    c.alphas = {0.0, 0.5, 1.0};
    c.samples_per_cell = 3;
    c.ensemble = EnsembleSpec::goe(64, 0);
    c.seed = 5;
    return c;
}

}  // namespace

TEST_SUITE("local_law") {

TEST_CASE("prediction formulas") {
    const int N = 400;
    const double eta = 0.01, rho = 1.0 / M_PI;
    // traceless k = 1: the split bound loses its first term and equals the bulk bound
    CHECK(split_prediction(N, 0.0, 1.0, rho, eta) ==
          doctest::Approx(bulk_prediction(N, 1, 1.0, rho, eta)).epsilon(1e-14));
    CHECK(bulk_prediction(N, 1, 1.0, rho, eta) == doctest::Approx(std::sqrt(rho) / (N * std::sqrt(eta))));
    // A = I: only the 1/(N eta) branch remains
    CHECK(split_prediction(N, 1.0, 0.0, rho, eta) == doctest::Approx(1.0 / (N * eta)).epsilon(1e-14));
    // far regime at z = 12i, k = 1
    const double d = distance_to_support(cplx(0.0, 12.0));
    CHECK(d == 12.0);
    // regime factor 1/(sqrt(N) d^2) times the prefactor N^{k/2-1}
    CHECK(far_prediction(N, 1, 1.0, d) ==
          doctest::Approx(std::pow(N, -0.5) / (std::sqrt(N) * d * d)).epsilon(1e-14));
    CHECK(far_prediction(N, 1, 1.0, 2.0 * d) == doctest::Approx(0.25 * far_prediction(N, 1, 1.0, d)).epsilon(1e-14));
    CHECK(bulk_prediction(N, 3, 2.0, rho, eta) == doctest::Approx(std::pow(N, 0.5) * 2.0 * std::sqrt(rho / (N * eta))));
}

TEST_CASE("synthetic power laws give exact slopes") {
    std::vector<ErrorRecord> a, b;
    for (double eta : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
        for (int s = 0; s < 3; ++s) {
            a.push_back(synthetic(500, eta, 0.7 * std::pow(eta, -0.5)));
            b.push_back(synthetic(500, eta, 2.0 / (500 * eta)));
        }
    }
    const SlopeFit fa = fit_scaling_exponent(a, ScalingAxis::Eta);
    CHECK(std::abs(fa.slope + 0.5) <= 1e-12);
    CHECK(fa.points == 5);
    CHECK(std::abs(fit_scaling_exponent(b, ScalingAxis::Eta).slope + 1.0) <= 1e-12);

    std::vector<ErrorRecord> n;
    for (int N : {100, 200, 400, 800}) n.push_back(synthetic(N, 0.1, 3.0 / N));
    CHECK(std::abs(fit_scaling_exponent(n, ScalingAxis::N).slope + 1.0) <= 1e-12);
}

TEST_CASE("scaling fit preconditions") {
    std::vector<ErrorRecord> few;
    for (double eta : {0.1, 0.2, 0.3}) few.push_back(synthetic(100, eta, 1.0));
    CHECK_THROWS_AS(fit_scaling_exponent(few, ScalingAxis::Eta), NumericalError);
    std::vector<ErrorRecord> mixed;
    for (double eta : {0.1, 0.2, 0.3, 0.4}) mixed.push_back(synthetic(100, eta, 1.0));
    mixed.push_back(synthetic(200, 0.1, 1.0));
    CHECK_THROWS_AS(fit_scaling_exponent(mixed, ScalingAxis::Eta), UsageError);
    std::vector<ErrorRecord> zero;
    for (double eta : {0.1, 0.2, 0.3, 0.4}) zero.push_back(synthetic(100, eta, 0.0));
    CHECK_THROWS_AS(fit_scaling_exponent(zero, ScalingAxis::Eta), NumericalError);
}

TEST_CASE("uniformity of exactly matching predictions") {
    std::vector<ErrorRecord> recs;
    for (double alpha : {0.0, 0.5, 1.0})
        for (int s = 0; s < 4; ++s) {
            ErrorRecord r = synthetic(100, 0.1, 1.0 + s);
            r.alpha = alpha;
            r.ratio = 1.0;
            r.ratio_opnorm = 1.0;
            recs.push_back(r);
        }
    const auto rep = rank_uniformity_report(recs);
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].score == 1.0);
    CHECK(rep[0].rows.size() == 3);
    recs.resize(8);  // two alphas only
    CHECK(rank_uniformity_report(recs).empty());
}

TEST_CASE("sweep records are finite and positive") {
    const auto recs = run_error_sweep(small_config());
    CHECK(recs.size() == 3 * 2 * 3);
    for (const auto& r : recs) {
        REQUIRE_FALSE(r.skipped);
        CHECK(std::isfinite(r.ratio));
        CHECK(r.ratio > 0.0);
        CHECK(r.prediction > 0.0);
    }
}

TEST_CASE("Hilbert-Schmidt and operator-norm ratios differ by N^{(1-alpha)/2} per factor") {
    for (const auto& r : run_error_sweep(small_config())) {
        const double expect = std::pow(std::pow(64.0, (1.0 - r.alpha_effective) / 2.0), r.k);
        CHECK(r.ratio / r.ratio_opnorm == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("identity line reduces to the trace of G - m") {
    SweepConfig c = small_config();
    c.ks = {1};
    c.alphas = {1.0};
    c.include_identity = true;
    c.samples_per_cell = 1;
    const auto recs = run_error_sweep(c);
    REQUIRE(recs.size() == 2);
    const ErrorRecord& id = recs[0].alpha ? recs[1] : recs[0];
    CHECK_FALSE(id.alpha.has_value());
    CHECK(id.prediction == doctest::Approx(1.0 / (64 * 0.5)));
    const auto w = sample_wigner(c.ensemble.with_seed(id.seed));
    const EigenSystem e = eigendecompose(w);
    const cplx z(0.0, 0.5);
    cplx g = 0.0;
    for (int i = 0; i < 64; ++i) g += 1.0 / (e.lambdas(i) - z);
    CHECK(id.error == doctest::Approx(std::abs(g / 64.0 - stieltjes_m(z))).epsilon(1e-10));
}

TEST_CASE("regime preconditions skip cells with a warning") {
    SweepConfig c = small_config();
    c.etas = {1e-4, 0.5};
    auto recs = run_error_sweep(c);
    int skipped = 0;
    for (const auto& r : recs)
        if (r.skipped) {
            ++skipped;
            CHECK(r.eta == 1e-4);
            CHECK_FALSE(r.warning.empty());
        }
    CHECK(skipped == 2);

    c.regime = Regime::Far;
    c.etas = {12.0, 0.5};
    recs = run_error_sweep(c);
    for (const auto& r : recs) {
        if (r.eta == 0.5) CHECK(r.skipped);
        if (r.eta == 12.0 && !r.skipped) {
            CHECK(r.prediction == doctest::Approx(far_prediction(64, r.k, 1.0, 12.0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("isotropic sweep alternates coordinate and Haar vectors") {
    SweepConfig c = small_config();
    c.mode = ChainMode::Isotropic;
    c.ks = {0, 1};
    c.samples_per_cell = 2;
    const auto recs = run_error_sweep(c);
    bool coord = false, haar = false;
    for (const auto& r : recs) {
        CHECK(std::isfinite(r.ratio));
        coord = coord || r.vector_kind == "coordinate";
        haar = haar || r.vector_kind == "haar";
    }
    CHECK(coord);
    CHECK(haar);
}

TEST_CASE("invalid sweep configurations") {
    SweepConfig c = small_config();
    c.Ns.clear();
    CHECK_THROWS_AS(run_error_sweep(c), ConfigError);
    c = small_config();
    c.etas = {-1.0};
    CHECK_THROWS_AS(run_error_sweep(c), ConfigError);
    c = small_config();
    c.ks = {0};
    CHECK_THROWS_AS(run_error_sweep(c), ConfigError);
    c = small_config();
    c.alphas = {1.5};
    CHECK_THROWS_AS(run_error_sweep(c), ConfigError);
}

TEST_CASE("traceless k = 1 error scales like eta^{-1/2}") {
    SweepConfig c;
    c.Ns = {2000};
    c.eta_exponents = {0.9, 0.75, 0.6, 0.45, 0.3, 0.2};
    c.ks = {1};
    c.alphas = {1.0};
    c.samples_per_cell = 6;
    c.epsilon = 0.0;
    c.ensemble = EnsembleSpec::goe(2000, 0);
    c.seed = 77;
    const auto recs = run_error_sweep(c);
    const SlopeFit f = fit_scaling_exponent(recs, ScalingAxis::Eta);
    MESSAGE("eta slope " << f.slope << " +- " << f.stderr_);
    CHECK(std::abs(f.slope + 0.5) <= 0.1);
}

}
