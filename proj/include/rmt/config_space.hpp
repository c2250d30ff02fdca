#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <unordered_map>
#include <vector>

#include "rmt/matching.hpp"
#include "rmt/types.hpp"

namespace rmt {

// Omega^n enumerated as sorted site multisets (s_1 <= ... <= s_n) in lexicographic order.
class EtaSpace {
public:
    EtaSpace(int N, int n);
    int N() const { return N_; }
    int n() const { return n_; }
    int size() const { return static_cast<int>(states_.size()); }
    const std::vector<int>& sites(int idx) const { return states_[idx]; }
    ParticleConfig config(int idx) const;
    int index(const ParticleConfig& eta) const;
    int index_sorted(const std::vector<int>& sorted_sites) const;

private:
    int N_, n_;
    std::vector<std::vector<int>> states_;
    std::unordered_map<long long, int> lookup_;
    long long key(const std::vector<int>& v) const;
};

// Lambda^n: tuples x in [N]^{2n} with even multiplicities, in lexicographic tuple order.
class LambdaSpace {
public:
    LambdaSpace(int N, int n);
    int N() const { return N_; }
    int n() const { return n_; }
    int size() const { return static_cast<int>(points_.size()); }
    const LatticePoint& point(int idx) const { return points_[idx]; }
    int index(const LatticePoint& x) const;  // -1 when x is not in Lambda^n

private:
    int N_, n_;
    std::vector<LatticePoint> points_;
    std::unordered_map<long long, int> lookup_;
    long long key(const std::vector<int>& v) const;
};

enum class GeneratorKind { EtaB, LatticeL, ShortRangeS, ProductA };

using SparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct GeneratorParams {
    int ell = 0;              // short-range cutoff |i - j| <= ell (S and A)
    double delta = 0.1;       // J = {i : gamma_i(0) in (-2 + delta, 2 - delta)}
    double eta = 0.0;         // A only
    double rate_scale = 1.0;  // global multiplier on every jump rate
    int max_N = 40;
    int max_n = 2;
};

// Row x holds the jump rates out of x; (Op h)(x) = sum_y Op(x, y) h(y).
struct ConfigOperator {
    GeneratorKind kind = GeneratorKind::EtaB;
    std::shared_ptr<const EtaSpace> eta_space;        // EtaB
    std::shared_ptr<const LambdaSpace> lambda_space;  // the others
    SparseOp matrix;

    int size() const { return static_cast<int>(matrix.rows()); }
    RealVector apply(const RealVector& h) const { return matrix * h; }
};

// 0-based indices of J for N sites.
std::vector<int> bulk_index_set(int N, double delta);

// Builds B, L, S or A at the eigenvalues lambda. Exceeding max_N or max_n
// throws BudgetError.
ConfigOperator build_generator(GeneratorKind kind, const RealVector& lambda, int n,
                               const GeneratorParams& params = {});

// Same operator, reusing an existing state space.
ConfigOperator build_generator(GeneratorKind kind, const RealVector& lambda,
                               std::shared_ptr<const EtaSpace> eta_space,
                               std::shared_ptr<const LambdaSpace> lambda_space,
                               const GeneratorParams& params = {});

// Piecewise-constant generator path: ops[m] acts on [times[m], times[m + 1]).
struct GeneratorPath {
    std::vector<double> times;
    std::vector<ConfigOperator> ops;
};

struct SemigroupOptions {
    int dense_limit = 400;  // exact matrix exponential up to this many states
    double rk4_safety = 1.0;
};

// Solves d/dt h = Op(t) h forward from s to t.
RealVector evolve_semigroup(const RealVector& h0, const GeneratorPath& path, double s, double t,
                            const SemigroupOptions& opt = {});

struct DirichletComparison {
    double form_s = 0.0;  // <h, S h>_pi
    double form_a = 0.0;  // <h, A h>_mu, mu uniform
    double ratio = 0.0;   // form_s / form_a
};

DirichletComparison dirichlet_compare(const RealVector& h, const ConfigOperator& s, const ConfigOperator& a);

}  // namespace rmt
