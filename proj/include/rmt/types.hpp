#pragma once

#include <complex>
#include <variant>

#include <Eigen/Dense>

namespace rmt {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

// Real or complex dense matrix; SelfAdjointMatrix marks the self-adjoint uses.
using AnyMatrix = std::variant<RealMatrix, ComplexMatrix>;
using SelfAdjointMatrix = AnyMatrix;

enum class Symmetry { Real = 1, Complex = 2 };

inline int beta_of(Symmetry s) { return s == Symmetry::Real ? 1 : 2; }

}  // namespace rmt
