#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rmt/config_space.hpp"
#include "rmt/dbm.hpp"
#include "rmt/errors.hpp"
#include "rmt/matching.hpp"
#include "rmt/moment_flow.hpp"
#include "rmt/random.hpp"
#include "rmt/spectral.hpp"
#include "rmt/stats.hpp"

using namespace rmt;

namespace {

RealVector spaced(int N, double gap) {
    RealVector l(N);
    for (int i = 0; i < N; ++i) l(i) = gap * (i - 0.5 * (N - 1));
    return l;
}

RealVector quantile_lambda(int N) {
    const auto g = semicircle_quantiles(N, 0.0);
    RealVector l(N);
    for (int i = 0; i < N; ++i) l(i) = g[i];
    return l;
}

double max_row_sum(const ConfigOperator& op) {
    double worst = 0.0;
    for (int r = 0; r < op.size(); ++r) {
        double s = 0.0;
        for (SparseOp::InnerIterator it(op.matrix, r); it; ++it) s += it.value();
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("matching enumeration counts") {
    CHECK(enumerate_matchings(ParticleConfig::single_site(5, 2, 2)).size() == 3);
    CHECK(enumerate_matchings(ParticleConfig::single_site(5, 2, 1)).size() == 1);
    const std::vector<int> ij{1, 3};
    const ParticleConfig two = ParticleConfig::from_sites(5, ij);
    const auto m = enumerate_matchings(two);
    REQUIRE(m.size() == 3);
    int diagonal = 0, cross = 0;
    for (const auto& g : m) {
        const bool same = g[0].first.site == g[0].second.site;
        (same ? diagonal : cross)++;
    }
    CHECK(diagonal == 1);
    CHECK(cross == 2);
    for (int n = 1; n <= max_enumerated_particles; ++n) {
        const auto mm = enumerate_matchings(ParticleConfig::single_site(4, 0, n));
        CHECK(static_cast<long long>(mm.size()) == double_factorial(2 * n - 1));
    }
    const std::vector<int> mixed{0, 0, 2, 3};
    const ParticleConfig e = ParticleConfig::from_sites(6, mixed);
    CHECK(static_cast<long long>(enumerate_matchings(e).size()) == double_factorial(7));
    CHECK(matching_multiplicity(e) == 3);
    CHECK_THROWS_AS(enumerate_matchings(ParticleConfig::single_site(4, 0, 7)), UsageError);
}

TEST_CASE("particle configurations and lattice points") {
    const std::vector<int> s{3, 1, 3};
    const ParticleConfig e = ParticleConfig::from_sites(5, s);
    CHECK(e.n() == 3);
    CHECK(e.counts == std::vector<int>{0, 1, 0, 2, 0});
    CHECK(e.sorted_sites() == std::vector<int>{1, 3, 3});
    CHECK(e.support() == std::vector<int>{1, 3});
    const LatticePoint x{{2, 0, 2, 0}};
    CHECK(x.in_lambda());
    CHECK(x.multiplicity(2) == 2);
    CHECK(x.project(4) == ParticleConfig::from_sites(4, std::vector<int>{0, 2}));
    const LatticePoint odd{{2, 0, 2, 1}};
    CHECK_FALSE(odd.in_lambda());
    CHECK_THROWS_AS(odd.project(4), DomainError);
}

TEST_CASE("f normalization reduces the single-site n = 2 case") {
    const ParticleConfig e = ParticleConfig::single_site(30, 4, 2);
    const auto m = enumerate_matchings(e);
    const double p = 0.37, hs2 = 1.3;
    const double f = f_normalization(e, hs2) * matching_sum(m, [&](int, int) { return p; });
    CHECK(f == doctest::Approx(30.0 * p * p / (2.0 * hs2)).epsilon(1e-14));
    CHECK_THROWS_AS(f_normalization(e, 0.0), DegenerateError);
}

TEST_CASE("observable f under exact Haar frames") {
    const int N = 40, S = 2000;
    const Observable A = make_alpha_mesoscopic(N, 1.0, 3);
    std::vector<EigenSystem> eig;
    std::vector<OverlapSet> ov;
    eig.reserve(S);
    for (int s = 0; s < S; ++s) eig.push_back(eigendecompose(sample_wigner(EnsembleSpec::goe(N, 7000 + s))));
    for (int s = 0; s < S; ++s) ov.push_back(overlap_matrix(eig[s], A));
    const FEstimate f2 = observable_f(ParticleConfig::single_site(N, 20, 2), ov, A);
    MESSAGE("f(2 e_i) = " << f2.value << " +- " << f2.mc_error);
    CHECK(f2.samples == S);
    CHECK_FALSE(f2.odd_n);
    CHECK(std::abs(f2.value - N / (N + 2.0)) <= 4.0 * f2.mc_error);
    const FEstimate f1 = observable_f(ParticleConfig::single_site(N, 20, 1), ov, A);
    CHECK(f1.odd_n);
    CHECK(std::abs(f1.value) <= 4.0 * f1.mc_error);
    const FEstimate fpair = observable_f(ParticleConfig::from_sites(N, std::vector<int>{15, 25}), ov, A);
    CHECK(std::isfinite(fpair.value));
    CHECK(fpair.mc_error > 0.0);
}

TEST_CASE("measure pi and averaging operator") {
    CHECK(config_measure_pi(LatticePoint{{1, 1, 1, 1}}) == 9);
    CHECK(config_measure_pi(LatticePoint{{1, 2, 1, 2}}) == 1);
    CHECK(config_measure_pi(LatticePoint{{3, 3}}) == 1);
    CHECK(config_measure_pi(LatticePoint{{0, 0, 0, 0, 0, 0}}) == 225);
    CHECK_THROWS_AS(config_measure_pi(LatticePoint{{1, 2}}), DomainError);
    const LatticePoint x{{0, 0, 0, 0}};
    CHECK(averaging_op(x, x, 3) == 1.0);
    const int K = 4;
    CHECK(averaging_op(x, LatticePoint{{0, 0, 2, 2}}, K) == doctest::Approx((K - 1.0) / K));
    CHECK(averaging_op(x, LatticePoint{{0, 0, 7, 7}}, K) == 0.0);
    CHECK(averaging_op(x, LatticePoint{{0, 1, 2, 0}}, 2) == 0.0);
    CHECK(averaging_op(x, LatticePoint{{0, 1, 1, 0}}, 2) == 0.5);
}

TEST_CASE("state space enumeration") {
    const EtaSpace om(7, 2);
    CHECK(om.size() == 28);
    for (int k = 0; k < om.size(); ++k) {
        REQUIRE(om.index(om.config(k)) == k);
        if (k > 0) CHECK(std::lexicographical_compare(om.sites(k - 1).begin(), om.sites(k - 1).end(),
                                                       om.sites(k).begin(), om.sites(k).end()));
    }
    const LambdaSpace l1(9, 1);
    CHECK(l1.size() == 9);
    const LambdaSpace l2(6, 2);
    CHECK(l2.size() == 6 + 6 * 15);
    for (int k = 0; k < l2.size(); ++k) {
        REQUIRE(l2.point(k).in_lambda());
        REQUIRE(l2.index(l2.point(k)) == k);
    }
    CHECK(l2.index(LatticePoint{{0, 1, 2, 2}}) == -1);
    CHECK(l2.index(LatticePoint{{0, 0}}) == -1);
}

TEST_CASE("generator rates and row sums") {
    const RealVector lam = spaced(100, 0.1);
    GeneratorParams wide;
    wide.max_N = 100;
    const ConfigOperator B = build_generator(GeneratorKind::EtaB, lam, 1, wide);
    CHECK(B.matrix.coeff(10, 11) == doctest::Approx(2.0).epsilon(1e-12));  // c = 1, rate 2 eta_i (1 + 2 eta_j)
    CHECK(max_row_sum(B) <= 1e-12 * RealMatrix(B.matrix).cwiseAbs().maxCoeff());

    const RealVector q = quantile_lambda(16);
    GeneratorParams p;
    p.ell = 3;
    p.eta = 0.2;
    for (GeneratorKind k : {GeneratorKind::EtaB, GeneratorKind::LatticeL, GeneratorKind::ShortRangeS,
                            GeneratorKind::ProductA}) {
        for (int n : {1, 2}) {
            const ConfigOperator op = build_generator(k, q, n, p);
            const double scale = std::max(1.0, RealMatrix(op.matrix).cwiseAbs().maxCoeff());
            REQUIRE(max_row_sum(op) <= 1e-12 * scale);
            for (int r = 0; r < op.size(); ++r) REQUIRE(op.matrix.coeff(r, r) <= 0.0);
        }
    }
}

TEST_CASE("n = 1: L reduces to B") {
    const RealVector q = quantile_lambda(12);
    const ConfigOperator B = build_generator(GeneratorKind::EtaB, q, 1);
    const ConfigOperator L = build_generator(GeneratorKind::LatticeL, q, 1);
    REQUIRE(B.size() == L.size());
    CHECK((RealMatrix(B.matrix) - RealMatrix(L.matrix)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reversibility, symmetry and equivariance") {
    const RealVector q = quantile_lambda(10);
    GeneratorParams p;
    p.ell = 2;
    p.eta = 0.3;
    for (GeneratorKind k : {GeneratorKind::LatticeL, GeneratorKind::ShortRangeS}) {
        const ConfigOperator op = build_generator(k, q, 2, p);
        const RealMatrix M(op.matrix);
        const auto& sp = *op.lambda_space;
        for (int x = 0; x < op.size(); ++x)
            for (int y = 0; y < op.size(); ++y) {
                const double lhs = config_measure_pi(sp.point(x)) * M(x, y);
                const double rhs = config_measure_pi(sp.point(y)) * M(y, x);
                REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
            }
        // coordinate permutations act as automorphisms
        Rng rng = make_rng(17);
        std::vector<int> perm(4);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto permuted = [&](int idx) {
            LatticePoint y = sp.point(idx);
            for (int a = 0; a < 4; ++a) y.coords[a] = sp.point(idx).coords[perm[a]];
            return sp.index(y);
        };
        for (int x = 0; x < op.size(); ++x)
            for (int y = 0; y < op.size(); ++y) REQUIRE(M(x, y) == doctest::Approx(M(permuted(x), permuted(y))));
    }
    const ConfigOperator A = build_generator(GeneratorKind::ProductA, q, 2, p);
    const RealMatrix MA(A.matrix);
    CHECK((MA - MA.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * MA.cwiseAbs().maxCoeff());
}

TEST_CASE("projection consistency L (f o phi) = (B f) o phi") {
    const RealVector q = quantile_lambda(9);
    auto lam = std::make_shared<LambdaSpace>(9, 2);
    auto om = std::make_shared<EtaSpace>(9, 2);
    const ConfigOperator L = build_generator(GeneratorKind::LatticeL, q, nullptr, lam);
    const ConfigOperator B = build_generator(GeneratorKind::EtaB, q, om, nullptr);
    Rng rng = make_rng(3);
    std::normal_distribution<double> n;
    RealVector f(om->size());
    for (int k = 0; k < f.size(); ++k) f(k) = n(rng);
    RealVector g(lam->size());
    for (int x = 0; x < g.size(); ++x) g(x) = f(om->index(lam->point(x).project(9)));
    const RealVector lg = L.apply(g);
    const RealVector bf = B.apply(f);
    for (int x = 0; x < g.size(); ++x)
        REQUIRE(std::abs(lg(x) - bf(om->index(lam->point(x).project(9)))) <= 1e-10 * (1.0 + std::abs(lg(x))));

    // the same holds for the semigroups
    GeneratorPath pl{{0.0, 0.1}, {L}}, pb{{0.0, 0.1}, {B}};
    const RealVector gt = evolve_semigroup(g, pl, 0.0, 0.1);
    const RealVector ft = evolve_semigroup(f, pb, 0.0, 0.1);
    for (int x = 0; x < g.size(); ++x)
        REQUIRE(std::abs(gt(x) - ft(om->index(lam->point(x).project(9)))) <= 1e-9 * (1.0 + std::abs(gt(x))));
}

TEST_CASE("generator preconditions") {
    CHECK_THROWS_AS(build_generator(GeneratorKind::EtaB, quantile_lambda(41), 1), BudgetError);
    CHECK_THROWS_AS(build_generator(GeneratorKind::LatticeL, quantile_lambda(10), 3), BudgetError);
    RealVector flat = quantile_lambda(10);
    flat(4) = flat(5);
    CHECK_THROWS_AS(build_generator(GeneratorKind::EtaB, flat, 1), DegenerateError);
    CHECK_THROWS_AS(build_generator(GeneratorKind::ProductA, quantile_lambda(10), 1), DomainError);
    GeneratorParams p;
    p.max_N = 60;
    CHECK(build_generator(GeneratorKind::EtaB, quantile_lambda(50), 1, p).size() == 50);
}

TEST_CASE("semigroup evolution") {
    const RealVector q = quantile_lambda(14);
    GeneratorParams p;
    p.ell = 2;
    const ConfigOperator L = build_generator(GeneratorKind::LatticeL, q, 1, p);
    const ConfigOperator S = build_generator(GeneratorKind::ShortRangeS, q, 1, p);
    GeneratorPath pl{{0.0, 0.05, 0.2}, {L, L}}, ps{{0.0, 0.05, 0.2}, {S, S}};
    RealVector bump = RealVector::Zero(L.size());
    bump(7) = 1.0;
    CHECK((evolve_semigroup(bump, pl, 0.1, 0.1) - bump).norm() == 0.0);
    const RealVector one = RealVector::Ones(L.size());
    CHECK((evolve_semigroup(one, pl, 0.0, 0.2) - one).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((evolve_semigroup(one, ps, 0.0, 0.2) - one).cwiseAbs().maxCoeff() <= 1e-12);
    SemigroupOptions rk;
    rk.dense_limit = 0;
    rk.rk4_safety = 0.05;
    const RealVector dense = evolve_semigroup(bump, pl, 0.0, 0.2);
    const RealVector stepped = evolve_semigroup(bump, pl, 0.0, 0.2, rk);
    CHECK((dense - stepped).cwiseAbs().maxCoeff() <= 1e-7);
    // U - U_S grows with the elapsed time for a bulk bump
    std::vector<double> gap;
    for (double t : {0.02, 0.05, 0.1, 0.2})
        gap.push_back((evolve_semigroup(bump, pl, 0.0, t) - evolve_semigroup(bump, ps, 0.0, t)).norm());
    for (std::size_t k = 1; k < gap.size(); ++k) CHECK(gap[k] > gap[k - 1]);
    CHECK_THROWS_AS(evolve_semigroup(bump, pl, 0.0, 0.3), DomainError);
}

TEST_CASE("Dirichlet forms") {
    const RealVector q = quantile_lambda(20);
    GeneratorParams p;
    p.ell = 3;
    p.eta = 0.2;
    auto lam = std::make_shared<LambdaSpace>(20, 1);
    const ConfigOperator S = build_generator(GeneratorKind::ShortRangeS, q, nullptr, lam, p);
    const ConfigOperator A = build_generator(GeneratorKind::ProductA, q, nullptr, lam, p);
    const DirichletComparison c = dirichlet_compare(RealVector::Ones(lam->size()), S, A);
    CHECK(std::abs(c.form_s) <= 1e-12);
    CHECK(std::abs(c.form_a) <= 1e-12);
    Rng rng = make_rng(4);
    std::normal_distribution<double> n;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        RealVector h(lam->size());
        for (int k = 0; k < h.size(); ++k) h(k) = n(rng);
        const DirichletComparison d = dirichlet_compare(h, S, A);
        REQUIRE(d.form_s <= 1e-12);
        REQUIRE(d.form_a <= 1e-12);
        REQUIRE(std::isfinite(d.ratio));
        worst = std::max(worst, d.ratio);
    }
    MESSAGE("largest form ratio over 100 random h: " << worst);
    CHECK_THROWS_AS(dirichlet_compare(RealVector::Ones(lam->size()), A, A), UsageError);
}

TEST_CASE("PDE check degenerate calls") {
    const auto w = sample_wigner(EnsembleSpec::goe(8, 1));
    const DbmTrajectory path = simulate_trajectory(w, 0.02, 4, DbmMethod::MatrixDiagonalize, 2);
    const Observable A = make_alpha_mesoscopic(8, 1.0, 1);
    const std::vector<ParticleConfig> etas{ParticleConfig::single_site(8, 3, 1)};
    PdeCheckConfig cfg;
    cfg.grid = {0, 2, 4};
    cfg.replicas = 0;
    const auto r = pde_residual_check(path, eigendecompose(w).real_vectors(), A, etas, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0].inconclusive);
    cfg.grid = {0, 4};
    cfg.replicas = 10;
    CHECK_THROWS_AS(pde_residual_check(path, eigendecompose(w).real_vectors(), A, etas, cfg), UsageError);
}

TEST_CASE("PDE residual from a stationary start") {
    const int N = 8;
    const auto w = sample_wigner(EnsembleSpec::goe(N, 21));
    const DbmTrajectory path = simulate_trajectory(w, 0.04, 40, DbmMethod::MatrixDiagonalize, 22);
    const Observable A = make_alpha_mesoscopic(N, 1.0, 2);
    const std::vector<ParticleConfig> etas{ParticleConfig::single_site(N, 3, 2)};
    PdeCheckConfig cfg;
    cfg.replicas = 400;
    cfg.grid = {0, 10, 20, 30, 40};
    cfg.seed = 23;
    cfg.options.c0 = 0.05;
    const auto r = pde_residual_check(path, eigendecompose(w).real_vectors(), A, etas, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0].points.size() == 3);
    for (const auto& pt : r[0].points) {
        CHECK(std::isfinite(pt.residual));
        CHECK(pt.se > 0.0);
    }
    for (std::size_t g = 0; g < r[0].f.size(); ++g) CHECK(std::isfinite(r[0].f[g]));
}

TEST_CASE("flucque from a GOE start") {
    const int N = 60;
    const Observable A = make_alpha_mesoscopic(N, 1.0, 4);
    FlucqueConfig cfg;
    cfg.paths = 8;
    cfg.steps = 2;
    cfg.xi = 0.6;
    cfg.seed = 5;
    const FlucqueReport r2 = flucque_experiment(EnsembleSpec::goe(N, 0), A, 2, 0.05, cfg);
    MESSAGE("pooled f (n = 2) " << r2.pooled_f << " +- " << r2.pooled_error);
    CHECK(r2.paths_used == 8);
    CHECK(r2.target == 1.0);
    CHECK(std::abs(r2.pooled_f - N / (N + 2.0)) <= 4.0 * r2.pooled_error);
    const FlucqueReport r1 = flucque_experiment(EnsembleSpec::goe(N, 0), A, 1, 0.05, cfg);
    CHECK(r1.odd_n);
    CHECK(r1.target == 0.0);
    CHECK(std::abs(r1.pooled_f) <= 4.0 * r1.pooled_error);
    CHECK(r1.epsilon == doctest::Approx(1.0 + std::log(0.05) / std::log(60.0)));
}

}
