#include "rmt/eigensystem.hpp"

#include <cstdlib>

#include <lapacke.h>

#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"

namespace rmt {

const RealMatrix& EigenSystem::real_vectors() const {
    if (!is_real()) throw UsageError("eigenvectors are complex");
    return std::get<RealMatrix>(vectors);
}

const ComplexMatrix& EigenSystem::complex_vectors() const {
    if (is_real()) throw UsageError("eigenvectors are real");
    return std::get<ComplexMatrix>(vectors);
}

EigenSystem eigendecompose(const RealMatrix& a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw UsageError("eigendecompose: matrix not square");
    RealMatrix u = a;
    RealVector w(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, u.data(), n, w.data());
    if (info != 0) throw NumericalError("dsyevd failed with info " + std::to_string(info));
    EigenSystem e;
    e.lambdas = std::move(w);
    e.vectors = std::move(u);
    return e;
}

EigenSystem eigendecompose(const ComplexMatrix& a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw UsageError("eigendecompose: matrix not square");
    ComplexMatrix u = a;
    RealVector w(n);
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                    reinterpret_cast<lapack_complex_double*>(u.data()), n, w.data());
    if (info != 0) throw NumericalError("zheevd failed with info " + std::to_string(info));
    EigenSystem e;
    e.lambdas = std::move(w);
    e.vectors = std::move(u);
    return e;
}

EigenSystem eigendecompose(const WignerSample& w) {
    EigenSystem e = std::visit([](const auto& m) { return eigendecompose(m); }, w.matrix);
    e.time = w.time;
    return e;
}

RealVector eigenvalues_only(const RealMatrix& a) {
    const int n = static_cast<int>(a.rows());
    RealMatrix u = a;
    RealVector w(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, u.data(), n, w.data());
    if (info != 0) throw NumericalError("dsyevd failed with info " + std::to_string(info));
    return w;
}

RealVector eigenvalues_only(const WignerSample& w) {
    if (w.is_real()) return eigenvalues_only(w.real());
    return eigendecompose(w.complex()).lambdas;
}

}  // namespace rmt

extern "C" void openblas_set_num_threads(int);

// OpenBLAS 0.3.20 picks its Cooperlake dgemm kernel on recent Xeons and returns
// wrong products there from n ~ 300 on; the Haswell kernel is correct. A user
// supplied OPENBLAS_CORETYPE wins. Runs before the statically linked library's
// own initialiser.
__attribute__((constructor(101))) static void select_blas_kernel() {
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) setenv("OPENBLAS_CORETYPE", "Haswell", 0);
}

namespace rmt {

void set_blas_threads(int n) { openblas_set_num_threads(n < 1 ? 1 : n); }

}  // namespace rmt
