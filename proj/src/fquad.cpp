#include "gossipfpp/fquad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gossipfpp::fquad {

namespace {

double interp(const std::vector<double>& v, double t_min, double h, double t,
              double left, double right) {
    const double pos = (t - t_min) / h;
    if (pos <= 0.0) return left;
    if (pos >= static_cast<double>(v.size() - 1)) return right;
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

// Shift grid values so F(0) = 1/2; below the grid the tail is exponential
// with the given rate.
void center_at_zero(std::vector<double>& F, double t_min, double h, double rate) {
    const auto m = F.size();
    std::size_t j = 0;
    while (j < m && F[j] < 0.5) ++j;
    double t_star;
    if (j == 0 || j == m) return;  // median outside the grid; caught later
    const double f0 = F[j - 1], f1 = F[j];
    const double frac = (0.5 - f0) / std::max(f1 - f0, 1e-300);
    t_star = t_min + h * (static_cast<double>(j - 1) + frac);
    if (t_star == 0.0) return;
    std::vector<double> shifted(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = t_min + h * static_cast<double>(i) + t_star;
        if (t < t_min)
            shifted[i] = F[0] * std::exp(rate * (t - t_min));
        else
            shifted[i] = interp(F, t_min, h, t, F.front(), F.back());
    }
    F = std::move(shifted);
}

}  // namespace

double FquadSolution::cdf(double t) const {
    if (t < t_min) return F.front() * std::exp(tail_rate * (t - t_min));
    return interp(F, t_min, h, t, F.front(), F.back());
}

double FquadSolution::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("FquadSolution::quantile: q in (0,1)");
    auto it = std::lower_bound(F.begin(), F.end(), q);
    if (it == F.begin() || it == F.end())
        throw std::invalid_argument("FquadSolution::quantile: q outside grid range");
    const auto j = static_cast<std::size_t>(it - F.begin());
    const double f0 = F[j - 1], f1 = F[j];
    const double frac = (q - f0) / std::max(f1 - f0, 1e-300);
    return t_min + h * (static_cast<double>(j - 1) + frac);
}

double FquadSolution::density(double t) const {
    const double pos = (t - t_min) / h;
    if (pos <= 1.0 || pos >= static_cast<double>(F.size() - 2))
        return tail_rate * cdf(t);  // exponential tail approximation
    const auto j = static_cast<std::size_t>(pos + 0.5);
    return (F[j + 1] - F[j - 1]) / (2.0 * h);
}

double FquadSolution::integral_to(double t) const {
    if (t < t_min) return cdf(t) / tail_rate;
    const double pos = std::min((t - t_min) / h, static_cast<double>(F.size() - 1));
    const auto lo = static_cast<std::size_t>(pos);
    double base = cum[lo];
    const double frac = pos - static_cast<double>(lo);
    if (frac > 0.0 && lo + 1 < F.size()) {
        const double f_t = F[lo] + frac * (F[lo + 1] - F[lo]);
        base += 0.5 * (F[lo] + f_t) * frac * h;
    }
    if (t > t_at(F.size() - 1)) base += t - t_at(F.size() - 1);  // F ~ 1 beyond
    return base;
}

FquadSolution solve_fquad(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_fquad: lambda > 0");
    const double s = std::cbrt(lambda);
    return solve_fquad(lambda, {-12.0 / s, 6.0 / s, 1.0 / (256.0 * s)});
}

FquadSolution solve_fquad(double lambda, FquadGrid grid) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_fquad: lambda > 0");
    if (!(grid.t_min < 0.0 && grid.t_max > 0.0 && grid.h > 0.0))
        throw std::invalid_argument("solve_fquad: grid must straddle 0");

    const double a = std::cbrt(2.0 * lambda);  // left-tail decay rate
    const double t0 = grid.t_min;
    const double h = grid.h;
    const auto m = static_cast<std::size_t>(std::ceil((grid.t_max - t0) / h)) + 1;

    std::vector<double> F(m);
    for (std::size_t j = 0; j < m; ++j)
        F[j] = 1.0 / (1.0 + std::exp(-a * (t0 + h * static_cast<double>(j))));

    std::vector<double> m0(m), m1(m), m2(m), target(m);
    double residual = 0.0;
    int iterations = 0;
    int projections = 0;
    const int max_iter = 3000;

    for (; iterations < max_iter; ++iterations) {
        // cumulative moments of F with the analytic exponential left tail
        const double f0 = F[0];
        m0[0] = f0 / a;
        m1[0] = f0 * (t0 / a - 1.0 / (a * a));
        m2[0] = f0 * (t0 * t0 / a - 2.0 * t0 / (a * a) + 2.0 / (a * a * a));
        for (std::size_t j = 1; j < m; ++j) {
            const double s0 = t0 + h * static_cast<double>(j - 1);
            const double s1 = s0 + h;
            m0[j] = m0[j - 1] + 0.5 * h * (F[j - 1] + F[j]);
            m1[j] = m1[j - 1] + 0.5 * h * (s0 * F[j - 1] + s1 * F[j]);
            m2[j] = m2[j - 1] + 0.5 * h * (s0 * s0 * F[j - 1] + s1 * s1 * F[j]);
        }
        residual = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double t = t0 + h * static_cast<double>(j);
            const double mem = t * t * m0[j] - 2.0 * t * m1[j] + m2[j];
            target[j] = 1.0 - std::exp(-lambda * mem);
            residual = std::max(residual, std::abs((1.0 - F[j]) - (1.0 - target[j])));
        }
        if (residual < 1e-7) break;

        center_at_zero(target, t0, h, a);
        projections = 0;
        for (std::size_t j = 0; j < m; ++j) F[j] = 0.5 * F[j] + 0.5 * target[j];
        center_at_zero(F, t0, h, a);
        for (std::size_t j = 1; j < m; ++j) {
            if (F[j] < F[j - 1]) {
                F[j] = F[j - 1];
                ++projections;
            }
        }
    }
    if (residual >= 1e-6)
        throw std::runtime_error("solve_fquad: no convergence, residual = " +
                                 std::to_string(residual));
    if (F.front() > 1e-4 || F.back() < 1.0 - 1e-4)
        throw std::invalid_argument("solve_fquad: grid does not span the distribution");

    FquadSolution sol;
    sol.lambda = lambda;
    sol.t_min = t0;
    sol.h = h;
    sol.F = std::move(F);
    sol.tail_rate = a;
    sol.residual = residual;
    sol.iterations = iterations;
    sol.projections_at_convergence = projections;
    sol.cum.resize(m);
    sol.cum[0] = sol.F[0] / a;
    for (std::size_t j = 1; j < m; ++j)
        sol.cum[j] = sol.cum[j - 1] + 0.5 * h * (sol.F[j - 1] + sol.F[j]);
    return sol;
}

ScaledSpreadLaw::ScaledSpreadLaw(FquadSolution f1, double theta_near,
                                 double theta_far, double area)
    : f1_(std::move(f1)) {
    if (!(theta_near > 0.0 && theta_far > 0.0 && area > 0.0))
        throw std::invalid_argument("ScaledSpreadLaw: positive arguments required");
    kappa_ = std::cbrt(area * theta_far) * std::pow(theta_near, 2.0 / 3.0);
}

double ScaledSpreadLaw::window(double lo, double hi) const {
    if (!(lo > 0.0 && lo < hi && hi < 1.0))
        throw std::invalid_argument("window: need 0 < lo < hi < 1");
    return (f1_.quantile(hi) - f1_.quantile(lo)) / kappa_;
}

ScaledSpreadLaw fpp_limit_cdf(const FquadSolution& f1, double theta_near,
                              double theta_far, double area) {
    return ScaledSpreadLaw(f1, theta_near, theta_far, area);
}

}  // namespace gossipfpp::fquad
