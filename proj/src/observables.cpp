#include "rmt/observables.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <lapacke.h>

#include "rmt/errors.hpp"
#include "rmt/random.hpp"

namespace rmt {

double operator_norm(const RealMatrix& a) {
    if (a.size() == 0) return 0.0;
    if ((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0) {
        RealMatrix work = a;
        RealVector w(a.rows());
        const int n = static_cast<int>(a.rows());
        int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', n, work.data(), n, w.data());
        if (info != 0) throw NumericalError("dsyevd failed in operator_norm");
        return std::max(std::abs(w(0)), std::abs(w(n - 1)));
    }
    RealMatrix work = a;
    const int m = static_cast<int>(a.rows()), n = static_cast<int>(a.cols());
    RealVector s(std::min(m, n)), superb(std::max(1, std::min(m, n) - 1));
    const int info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'N', m, n, work.data(), m, s.data(), nullptr, 1, nullptr, 1,
                                    superb.data());
    if (info != 0) throw NumericalError("dgesvd failed in operator_norm");
    return s(0);
}

bool Observable::is_traceless(double tol) const {
    return std::abs(trace_avg_) <= tol * std::max(1.0, a_.cwiseAbs().maxCoeff());
}

Observable Observable::build(RealMatrix a, bool self_adjoint) {
    Observable o;
    const int N = static_cast<int>(a.rows());
    o.trace_avg_ = a.trace() / N;
    o.centered_ = a;
    o.centered_.diagonal().array() -= o.trace_avg_;
    o.hs2_ = o.centered_.squaredNorm() / N;
    o.self_adjoint_ = self_adjoint;
    o.a_ = std::move(a);
    o.opnorm_ = o.hs2_ == 0.0 ? 0.0 : operator_norm(o.centered_);
    return o;
}

Observable Observable::hermitized() const {
    RealMatrix s = 0.5 * (a_ + a_.transpose());
    return build(std::move(s), true);
}

Observable traceless(const RealMatrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) throw UsageError("observable must be square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw UsageError("observable is not self-adjoint");
    RealMatrix s = 0.5 * (a + a.transpose());
    return Observable::build(std::move(s), true);
}

Observable identity_observable(int N) { return traceless(RealMatrix::Identity(N, N)); }

Observable make_alpha_mesoscopic(int N, double alpha, std::uint64_t seed) {
    if (N < 2) throw UsageError("make_alpha_mesoscopic needs N >= 2");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    const long half = std::clamp<long>(std::lround(std::pow(N, alpha) / 2.0), 1, N / 2);
    const int R = static_cast<int>(2 * half);

    Rng rng = make_rng(seed, 0x0b5e);
    std::normal_distribution<double> n;
    RealMatrix g(N, R);
    for (int j = 0; j < R; ++j)
        for (int i = 0; i < N; ++i) g(i, j) = n(rng);
    Eigen::HouseholderQR<RealMatrix> qr(g);
    RealMatrix q = qr.householderQ() * RealMatrix::Identity(N, R);
    const RealMatrix r = qr.matrixQR().topLeftCorner(R, R);
    for (int j = 0; j < R; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);

    const double c = std::sqrt(static_cast<double>(N) / R);
    RealMatrix qd = q;
    for (int j = 0; j < R; ++j) qd.col(j) *= (j < half ? c : -c);
    RealMatrix a = qd * q.transpose();
    a = (0.5 * (a + a.transpose())).eval();
    Observable o = Observable::build(std::move(a), true);
    o.alpha_ = std::log(static_cast<double>(R)) / std::log(static_cast<double>(N));
    return o;
}

Observable coordinate_projector(int N, std::span<const int> S) {
    std::set<int> s(S.begin(), S.end());
    if (s.size() != S.size()) throw UsageError("coordinate_projector: repeated index");
    for (int i : s)
        if (i < 0 || i >= N) throw UsageError("coordinate_projector: index out of range");
    if (s.empty() || static_cast<int>(s.size()) == N)
        throw DegenerateError("coordinate_projector: S must be a nonempty proper subset");
    RealMatrix a = RealMatrix::Zero(N, N);
    for (int i : s) a(i, i) = 1.0;
    return traceless(a);
}

Observable rank_one_iso(const RealVector& x, const RealVector& y) {
    if (x.size() != y.size() || x.size() == 0) throw UsageError("rank_one_iso: length mismatch");
    if (x.norm() == 0.0 || y.norm() == 0.0) throw UsageError("rank_one_iso: zero vector");
    const int N = static_cast<int>(x.size());
    RealMatrix a = static_cast<double>(N) * y * x.transpose();
    a.diagonal().array() -= x.dot(y);
    return Observable::build(std::move(a), false);
}

}  // namespace rmt
