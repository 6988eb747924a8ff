#include "gossipfpp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gossipfpp::stats {

double MeanVar::stderr_mean() const {
    if (count < 2) return std::numeric_limits<double>::infinity();
    return std::sqrt(variance / static_cast<double>(count));
}

MeanVar mean_var(std::span<const double> xs) {
    RunningStat rs;
    for (double x : xs) rs.add(x);
    return {rs.mean(), rs.variance(), rs.count()};
}

void RunningStat::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void RunningStat::merge(const RunningStat& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    n_ += other.n_;
}

double RunningStat::variance() const {
    if (n_ < 2) return 0.0;
    return m2_ / static_cast<double>(n_ - 1);
}

double RunningStat::stderr_mean() const {
    if (n_ < 2) return std::numeric_limits<double>::infinity();
    return std::sqrt(variance() / static_cast<double>(n_));
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const auto n = sorted.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (idx == 0) idx = 1;
    if (idx > n) idx = n;
    return sorted[idx - 1];
}

double ks_distance_sorted(std::span<const double> sorted,
                          const std::function<double(double)>& cdf) {
    const auto n = sorted.size();
    if (n == 0) throw std::invalid_argument("KS of empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(sorted[i]);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max(d, std::max(std::abs(hi - f), std::abs(f - lo)));
    }
    return d;
}

double ks_uniform_sorted(std::span<const double> sorted) {
    return ks_distance_sorted(sorted, [](double x) {
        return std::clamp(x, 0.0, 1.0);
    });
}

double ks_two_sample_sorted(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS of empty sample");
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

SlopeFit ols(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols: need >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols: degenerate x values");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double ss_res = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ss_res += r * r;
        }
        fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
    }
    return fit;
}

SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0)
            throw std::invalid_argument("log_log_slope: inputs must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return ols(lx, ly);
}

namespace {

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int k = 1; k < 1000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi_square_pvalue(double stat, int df) {
    if (df <= 0) throw std::invalid_argument("chi_square_pvalue: df <= 0");
    return gamma_q(0.5 * df, 0.5 * stat);
}

double chi_square_uniform_pvalue(std::span<const std::size_t> counts) {
    if (counts.size() < 2) throw std::invalid_argument("need >= 2 cells");
    std::size_t total = 0;
    for (auto c : counts) total += c;
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return chi_square_pvalue(stat, static_cast<int>(counts.size()) - 1);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const auto n = x_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("MonotoneCubic: need >= 2 knots");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("MonotoneCubic: x not strictly increasing");
        if (y_[i] < y_[i - 1])
            throw std::invalid_argument("MonotoneCubic: y not nondecreasing");
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Fritsch-Carlson limiter keeps the interpolant monotone.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            d_[i] = d_[i + 1] = 0.0;
        } else {
            const double a = d_[i] / delta[i];
            const double b = d_[i + 1] / delta[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double t = 3.0 / std::sqrt(s);
                d_[i] = t * a * delta[i];
                d_[i + 1] = t * b * delta[i];
            }
        }
    }
}

std::size_t MonotoneCubic::segment(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_[x_.size() - 2]) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double MonotoneCubic::operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
    if (x <= x_.front()) return d_.front();
    if (x >= x_.back()) return d_.back();
    const auto i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double h00 = (6 * t2 - 6 * t) / h;
    const double h10 = 3 * t2 - 4 * t + 1;
    const double h01 = (-6 * t2 + 6 * t) / h;
    const double h11 = 3 * t2 - 2 * t;
    return h00 * y_[i] + h10 * d_[i] + h01 * y_[i + 1] + h11 * d_[i + 1];
}

double MonotoneCubic::inverse(double y) const {
    if (y <= y_.front()) return x_.front();
    if (y >= y_.back()) return x_.back();
    double lo = x_.front(), hi = x_.back();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((*this)(mid) < y)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gossipfpp::stats
