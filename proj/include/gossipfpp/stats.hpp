#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace gossipfpp::stats {

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // sample variance (n-1 denominator)
    std::size_t count = 0;
    double stderr_mean() const;
};

MeanVar mean_var(std::span<const double> xs);

// Streaming accumulator; merge() is associative so replicate results can be
// combined in any order.
class RunningStat {
public:
    void add(double x);
    void merge(const RunningStat& other);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // sample variance
    double stderr_mean() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Empirical q-quantile of sorted data: order statistic ceil(q*n).
double quantile_sorted(std::span<const double> sorted, double q);

// Kolmogorov-Smirnov distance between the empirical CDF of `sorted` and a
// reference CDF.
double ks_distance_sorted(std::span<const double> sorted,
                          const std::function<double(double)>& cdf);

// KS distance of sorted values in [0,1] against Uniform(0,1).
double ks_uniform_sorted(std::span<const double> sorted);

// Two-sample KS distance (inputs sorted).
double ks_two_sample_sorted(std::span<const double> a, std::span<const double> b);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares of y on x.
SlopeFit ols(std::span<const double> x, std::span<const double> y);
// OLS of log(y) on log(x); all inputs must be positive.
SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Upper tail probability of a chi-square statistic with df degrees of freedom.
double chi_square_pvalue(double stat, int df);

// Chi-square goodness-of-fit p-value for equiprobable cells.
double chi_square_uniform_pvalue(std::span<const std::size_t> counts);

// Monotone cubic (Fritsch-Carlson) interpolant through (x, y) with x strictly
// increasing and y nondecreasing. Used for smooth q(s) tables and their
// derivatives.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double derivative(double x) const;
    // Inverse lookup by bisection; requires y nondecreasing.
    double inverse(double y) const;
    bool empty() const { return x_.empty(); }

private:
    std::size_t segment(double x) const;
    std::vector<double> x_, y_, d_;  // d_: endpoint derivatives per knot
};

}  // namespace gossipfpp::stats
