#pragma once

#include <functional>
#include <vector>

#include "rmt/types.hpp"

namespace rmt {

struct QuadratureResult {
    cplx value;
    double error_estimate = 0.0;
    int intervals = 0;
};

// Globally adaptive Gauss-Kronrod (7/15) on [a, b] for a complex integrand.
// `breakpoints` seeds the initial partition; the refinement stops once
// error <= max(abs_tol, rel_tol * |value|). Throws NumericalError otherwise.
QuadratureResult integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol = 0.0,
                                    std::vector<double> breakpoints = {},
                                    int max_intervals = 20000);

}  // namespace rmt
