#include "rmt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rmt/errors.hpp"

namespace rmt {

double mean(std::span<const double> x) {
    if (x.empty()) throw UsageError("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw UsageError("variance needs at least two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw UsageError("quantile of an empty sample");
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return x[lo] * (1.0 - f) + x[hi] * f;
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw UsageError("KS distance of an empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

double ks_distance_normal(std::vector<double> x) { return ks_distance(std::move(x), normal_cdf); }

double ks_critical_95(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("least squares needs >= 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw NumericalError("degenerate spread in regression abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = static_cast<int>(x.size());
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return f;
}

MeanError mean_with_error(std::span<const double> x) {
    MeanError r;
    r.mean = mean(x);
    r.error = x.size() > 1 ? std::sqrt(sample_variance(x) / static_cast<double>(x.size())) : 0.0;
    return r;
}

MeanError batch_mean_with_error(std::span<const double> x, std::span<const int> group) {
    if (x.size() != group.size()) throw UsageError("batch means: size mismatch");
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& a = acc[group[i]];
        a.first += x[i];
        a.second += 1;
    }
    std::vector<double> means;
    for (auto& [g, a] : acc) means.push_back(a.first / a.second);
    MeanError r;
    r.mean = mean(x);
    r.error = means.size() > 1
                  ? std::sqrt(sample_variance(means) / static_cast<double>(means.size()))
                  : 0.0;
    return r;
}

long long double_factorial(int k) {
    if (k < -1) throw DomainError("double factorial of a negative argument");
    long long r = 1;
    for (int j = k; j > 1; j -= 2) r *= j;
    return r;
}

}  // namespace rmt
