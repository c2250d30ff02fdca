#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rmt {

double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);
double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);  // linear interpolation

double normal_cdf(double x);

// sup |F_n - F| against a continuous reference CDF.
double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf);
double ks_distance_normal(std::vector<double> x);
double ks_critical_95(std::size_t n);  // 1.36 / sqrt(n)

struct LinearFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    int points = 0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct MeanError {
    double mean = 0.0;
    double error = 0.0;  // standard error
};

// Mean and standard error treating each entry as one independent draw.
MeanError mean_with_error(std::span<const double> x);

// Same over group means (batch means), for correlated draws grouped by `group`.
MeanError batch_mean_with_error(std::span<const double> x, std::span<const int> group);

long long double_factorial(int k);  // k!!, with (-1)!! = 0!! = 1

}  // namespace rmt
