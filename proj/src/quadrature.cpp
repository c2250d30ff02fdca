#include "rmt/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "rmt/errors.hpp"

namespace rmt {

namespace {

// Kronrod 15-point nodes on [0, 1] with the embedded Gauss 7-point weights
constexpr std::array<double, 8> xk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    cplx value;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk15(const std::function<cplx(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const cplx fc = f(c);
    cplx rk = fc * wk[7];
    cplx rg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xk[j];
        const cplx f1 = f(c - dx);
        const cplx f2 = f(c + dx);
        rk += wk[j] * (f1 + f2);
        if (j % 2 == 1) rg += wg[j / 2] * (f1 + f2);
    }
    Panel p{a, b, rk * h, std::abs((rk - rg) * h)};
    return p;
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol,
                                    std::vector<double> breakpoints, int max_intervals) {
    if (!(b > a)) throw UsageError("integrate_adaptive: empty interval");
    std::vector<double> cuts{a, b};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Panel> heap;
    cplx total = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Panel p = gk15(f, cuts[i], cuts[i + 1]);
        total += p.value;
        err += p.err;
        heap.push(p);
    }
    int count = static_cast<int>(heap.size());
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (count >= max_intervals) {
            throw NumericalError("adaptive quadrature did not reach tolerance",
                                 err / std::max(std::abs(total), 1e-300));
        }
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw NumericalError("adaptive quadrature interval underflow",
                                 err / std::max(std::abs(total), 1e-300));
        }
        Panel left = gk15(f, worst.a, mid);
        Panel right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // re-sum to shed the drift from incremental updates
    cplx fresh = 0.0;
    double fresh_err = 0.0;
    while (!heap.empty()) {
        fresh += heap.top().value;
        fresh_err += heap.top().err;
        heap.pop();
    }
    return {fresh, fresh_err, count};
}

}  // namespace rmt
