#include "gossipfpp/analytic_cg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gossipfpp/quadrature.hpp"

namespace gossipfpp::analytic {

double LogisticLaw::cdf(double x) const {
    const double z = theta * x;
    return 1.0 / (1.0 + std::exp(-z));
}

double LogisticLaw::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("LogisticLaw::quantile: q in (0,1)");
    return std::log(q / (1.0 - q)) / theta;
}

double DeviantLaw::cdf(double x) const {
    const LogisticLaw base{theta};
    return 1.0 - std::pow(1.0 - base.cdf(x), phi / theta);
}

double g_kernel(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return -(1.0 - u) * std::log(1.0 - u);
}

double payoff_cg(const RewardSpec& spec, double phi, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("payoff_cg: theta must be > 0");
    if (phi < 0.0) throw std::invalid_argument("payoff_cg: phi must be >= 0");
    if (phi == 0.0) return 0.0;
    const double ratio = phi / theta;
    const double reward = spec.integrate_r(
        [ratio](double u) { return 1.0 - std::pow(1.0 - u, ratio); });
    return -phi + reward;
}

double payoff_cg_dphi(const RewardSpec& spec, double phi, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("payoff_cg_dphi: theta must be > 0");
    const double ratio = phi / theta;
    const double dreward = spec.integrate_r([ratio, theta](double u) {
        const double l = std::log(1.0 - u);
        return -l / theta * std::pow(1.0 - u, ratio);
    });
    return -1.0 + dreward;
}

double nash_cg(const RewardSpec& spec) {
    const double by_r = spec.integrate_r(g_kernel);
    // Independent route: integral of (1 + log(1-u)) R(u) du.
    const double by_R = spec.integrate_R(
        [](double u) { return 1.0 + std::log(1.0 - u); });
    if (std::abs(by_r - by_R) > 1e-8)
        throw std::logic_error("nash_cg: stationarity check failed, routes differ by " +
                               std::to_string(by_r - by_R));
    return by_r;
}

FiniteKNash nash_finite_k(std::int64_t n, std::int64_t k) {
    if (k < 2) throw std::invalid_argument("nash_finite_k: need k >= 2");
    if (k >= n) throw std::invalid_argument("nash_finite_k: need k < n");
    const double w = static_cast<double>(n) / static_cast<double>(k);
    // Stationarity of ego's probability of placing 2nd..k-th in the stage
    // races, with everyone racing at the common rate.
    double harmonic = 0.0, sum = 0.0;
    for (std::int64_t j = 2; j <= k; ++j) {
        harmonic += 1.0 / static_cast<double>(n - j + 1);
        sum += 1.0 - harmonic;
    }
    const double theta = w * sum / static_cast<double>(n - 1);
    return {theta, 1.0 - theta};
}

double prob_second(std::int64_t n, double phi, double theta) {
    if (n < 3) throw std::invalid_argument("prob_second: need n >= 3");
    if (phi < 0.0 || theta < 0.0)
        throw std::invalid_argument("prob_second: rates must be >= 0");
    if (phi == 0.0 && theta == 0.0)
        throw std::invalid_argument("prob_second: rates cannot both be 0");
    return phi / (phi + static_cast<double>(n - 2) * theta);
}

double nash_symmetric(double theta_asy) {
    if (theta_asy < 0.0)
        throw std::invalid_argument("nash_symmetric: rate must be >= 0");
    return 0.5 * theta_asy;
}

double nash_audience(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("nash_audience: need c > 0");
    const double integral = quad::tanh_sinh(
        [](double y) { return -(1.0 - y) / y * std::log(1.0 - y); }, 0.0, 1.0);
    return c * integral;
}

namespace {

// Shift grid values so that F(0) = 1/2, using linear interpolation in t.
// `tail_rate` extrapolates below the grid as F(t) = F[0] exp(rate (t - t0)).
void center_at_half(std::vector<double>& F, double t0, double h, double tail_rate) {
    const auto m = F.size();
    // locate the median crossing
    std::size_t j = 0;
    while (j < m && F[j] < 0.5) ++j;
    double t_star;
    if (j == 0) {
        t_star = t0;
    } else if (j == m) {
        t_star = t0 + h * static_cast<double>(m - 1);
    } else {
        const double f0 = F[j - 1], f1 = F[j];
        const double frac = (0.5 - f0) / std::max(f1 - f0, 1e-300);
        t_star = t0 + h * (static_cast<double>(j - 1) + frac);
    }
    if (t_star == t0) return;
    std::vector<double> shifted(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = t0 + h * static_cast<double>(i) + t_star;
        const double pos = (t - t0) / h;
        if (pos <= 0.0) {
            shifted[i] = F[0] * std::exp(tail_rate * (t - t0));
        } else if (pos >= static_cast<double>(m - 1)) {
            shifted[i] = F[m - 1];
        } else {
            const auto lo = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(lo);
            shifted[i] = F[lo] * (1.0 - frac) + F[lo + 1] * frac;
        }
    }
    F = std::move(shifted);
}

}  // namespace

double RegularCallsSolution::cdf(double t) const {
    const double pos = (t - t_min) / h;
    if (pos <= 0.0) return F.front();
    if (pos >= static_cast<double>(F.size() - 1)) return F.back();
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return F[lo] * (1.0 - frac) + F[lo + 1] * frac;
}

double RegularCallsSolution::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("quantile: q in (0,1)");
    auto it = std::lower_bound(F.begin(), F.end(), q);
    if (it == F.begin()) return t_min;
    if (it == F.end()) return t_min + h * static_cast<double>(F.size() - 1);
    const auto j = static_cast<std::size_t>(it - F.begin());
    const double f0 = F[j - 1], f1 = F[j];
    const double frac = (q - f0) / std::max(f1 - f0, 1e-300);
    return t_min + h * (static_cast<double>(j - 1) + frac);
}

RegularCallsSolution regular_calls_fixed_point(double theta, TimeGrid grid) {
    if (!(theta > 0.0))
        throw std::invalid_argument("regular_calls_fixed_point: theta > 0");
    if (!(grid.t_min < grid.t_max) || !(grid.h > 0.0))
        throw std::invalid_argument("regular_calls_fixed_point: bad grid");

    // Solve at rate 1 on an internal grid; general theta is a time scaling.
    const int pad = 64;  // points per unit time; the call period is 1
    const double h = 1.0 / pad;
    const double t0 = std::min(grid.t_min * theta, -10.0);
    const double t1 = std::max(grid.t_max * theta, 6.0);
    const auto m = static_cast<std::size_t>(std::ceil((t1 - t0) / h)) + 1;

    std::vector<double> F(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double t = t0 + h * static_cast<double>(j);
        F[j] = 1.0 / (1.0 + std::exp(-t));  // logistic initializer
    }

    // The left tail of the fixed point decays like e^t (rate-1 calls), so
    // below-grid values extrapolate with unit rate.
    const double tail_rate = 1.0;
    const double tail_geo = 1.0 / (1.0 - std::exp(-1.0));

    std::vector<double> log_prod(m);       // sum_{i>=0} log(1 - F(t - i))
    std::vector<double> psi(m + pad);      // survivor product, padded below grid
    std::vector<double> rhs(m);
    double residual = 0.0;
    int iter = 0;
    const int max_iter = 5000;

    for (; iter < max_iter; ++iter) {
        for (std::size_t j = 0; j < m; ++j) {
            const double f = std::min(F[j], 1.0 - 1e-15);
            if (j >= static_cast<std::size_t>(pad))
                log_prod[j] = std::log1p(-f) + log_prod[j - pad];
            else {
                const double s = t0 + h * static_cast<double>(j) - 1.0;
                const double tail_sum = F[0] * std::exp(tail_rate * (s - t0)) * tail_geo;
                log_prod[j] = std::log1p(-f) - tail_sum;
            }
        }
        for (int j = 0; j < pad; ++j) {
            const double s = t0 + h * static_cast<double>(j - pad);
            psi[j] = std::exp(-F[0] * std::exp(tail_rate * (s - t0)) * tail_geo);
        }
        for (std::size_t j = 0; j < m; ++j) psi[j + pad] = std::exp(log_prod[j]);

        residual = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.5 * (psi[j] + psi[j + pad]);
            for (int i = 1; i < pad; ++i) acc += psi[j + i];
            rhs[j] = acc * h;  // integral of the survivor product over one period
            residual = std::max(residual, std::abs((1.0 - F[j]) - rhs[j]));
        }
        if (residual < 1e-7) break;

        std::vector<double> fresh(m);
        for (std::size_t j = 0; j < m; ++j)
            fresh[j] = std::clamp(1.0 - rhs[j], 0.0, 1.0);
        center_at_half(fresh, t0, h, tail_rate);
        for (std::size_t j = 0; j < m; ++j) F[j] = 0.5 * F[j] + 0.5 * fresh[j];
        center_at_half(F, t0, h, tail_rate);
        for (std::size_t j = 1; j < m; ++j) F[j] = std::max(F[j], F[j - 1]);
    }
    if (residual >= 1e-6)
        throw std::runtime_error(
            "regular_calls_fixed_point: no convergence, residual = " +
            std::to_string(residual));

    // Coverage requirement on the requested grid.
    auto internal_at = [&](double t) {
        const double pos = (t - t0) / h;
        if (pos <= 0.0) return F.front();
        if (pos >= static_cast<double>(m - 1)) return F.back();
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        return F[lo] * (1.0 - frac) + F[lo + 1] * frac;
    };
    if (internal_at(grid.t_min * theta) > 1e-3 || internal_at(grid.t_max * theta) < 1.0 - 1e-3)
        throw std::invalid_argument(
            "regular_calls_fixed_point: grid does not span the distribution");

    RegularCallsSolution sol;
    sol.theta = theta;
    sol.t_min = grid.t_min;
    sol.h = grid.h;
    sol.residual = residual;
    sol.iterations = iter;
    const auto out_n = static_cast<std::size_t>(
                           std::floor((grid.t_max - grid.t_min) / grid.h + 1e-9)) + 1;
    sol.F.resize(out_n);
    for (std::size_t j = 0; j < out_n; ++j) {
        const double t = grid.t_min + grid.h * static_cast<double>(j);
        sol.F[j] = internal_at(t * theta);
    }
    return sol;
}

}  // namespace gossipfpp::analytic
