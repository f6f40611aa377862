#pragma once

#include <functional>
#include <vector>

namespace voltnet {

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
    double r2 = 0.0;
    int n = 0;
};

// ordinary least squares of y on x
LinFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

// Kolmogorov-Smirnov statistic of samples against a continuous CDF
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// asymptotic KS p-value with the Stephens small-sample correction
double ks_pvalue(double statistic, std::size_t n);

// upper tail of the chi-square distribution
double chi_square_pvalue(double statistic, int dof);

// standard normal CDF
double normal_cdf(double x);

// interpolated quantile (type-7) of an unsorted sample copy
double quantile(std::vector<double> samples, double q);

// lower-median: order statistic at floor((n-1)/2)
double lower_median(std::vector<double> samples);

// deterministic pairwise summation (merge-order invariant reductions)
double pairwise_sum(const std::vector<double>& xs);

} // namespace voltnet
