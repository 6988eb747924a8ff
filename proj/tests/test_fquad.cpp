#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gossipfpp/fquad.hpp"
#include "gossipfpp/stats.hpp"

using namespace gossipfpp;
using namespace gossipfpp::fquad;

TEST_CASE("fquad solution: residual, centering, monotonicity") {
    const auto sol = solve_fquad(1.0);
    CHECK(sol.residual < 1e-6);
    CHECK(sol.projections_at_convergence == 0);
    CHECK(std::is_sorted(sol.F.begin(), sol.F.end()));
    CHECK(sol.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.F.front() < 1e-4);
    CHECK(sol.F.back() > 1.0 - 1e-4);

    // plugging the solution back into the right side reproduces 1 - F
    const auto m = sol.F.size();
    const double a = sol.tail_rate;
    const double t0 = sol.t_min, h = sol.h;
    double im0 = sol.F[0] / a;
    double im1 = sol.F[0] * (t0 / a - 1.0 / (a * a));
    double im2 = sol.F[0] * (t0 * t0 / a - 2.0 * t0 / (a * a) + 2.0 / (a * a * a));
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double t = t0 + h * static_cast<double>(j);
        if (j > 0) {
            const double s0 = t - h, s1 = t;
            im0 += 0.5 * h * (sol.F[j - 1] + sol.F[j]);
            im1 += 0.5 * h * (s0 * sol.F[j - 1] + s1 * sol.F[j]);
            im2 += 0.5 * h * (s0 * s0 * sol.F[j - 1] + s1 * s1 * sol.F[j]);
        }
        const double mem = t * t * im0 - 2.0 * t * im1 + im2;
        worst = std::max(worst, std::abs((1.0 - sol.F[j]) - std::exp(-mem)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("fquad lambda scaling: F_lambda(t) = F_1(lambda^{1/3} t)") {
    const auto f1 = solve_fquad(1.0);
    const auto f8 = solve_fquad(8.0);
    double sup = 0.0;
    for (double t = -5.5; t <= 2.5; t += 0.003)
        sup = std::max(sup, std::abs(f8.cdf(t) - f1.cdf(2.0 * t)));
    CHECK(sup < 1e-3);
}

TEST_CASE("fquad left tail exponent is (2 lambda)^{1/3}") {
    const auto sol = solve_fquad(1.0);
    std::vector<double> ts, logs;
    for (double t = -11.5; t <= -8.0; t += 0.125) {
        ts.push_back(t);
        logs.push_back(std::log(sol.cdf(t)));
    }
    const auto fit = stats::ols(ts, logs);
    CHECK(fit.slope == doctest::Approx(std::cbrt(2.0)).epsilon(0.02));
}

TEST_CASE("fquad uniqueness probe: a second grid resolution agrees") {
    const auto fine = solve_fquad(1.0);
    const auto coarse = solve_fquad(1.0, {-12.0, 6.0, 1.0 / 128.0});
    double sup = 0.0;
    for (double t = -8.0; t <= 4.0; t += 0.01)
        sup = std::max(sup, std::abs(fine.cdf(t) - coarse.cdf(t)));
    CHECK(sup < 5e-4);
}

TEST_CASE("fquad integral_to matches direct quadrature of the solution") {
    const auto sol = solve_fquad(1.0);
    // direct trapezoid from the left grid edge plus tail
    double direct = sol.F.front() / sol.tail_rate;
    std::size_t j = 1;
    const double t_stop = 1.5;
    while (sol.t_at(j) <= t_stop) {
        direct += 0.5 * sol.h * (sol.F[j - 1] + sol.F[j]);
        ++j;
    }
    CHECK(sol.integral_to(sol.t_at(j - 1)) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("fquad error paths") {
    CHECK_THROWS_AS(solve_fquad(0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_fquad(-1.0), std::invalid_argument);
    // grid far too narrow to span the distribution
    CHECK_THROWS_AS(solve_fquad(1.0, {-1.0, 1.0, 1.0 / 256.0}), std::exception);
}

TEST_CASE("scaled spread law window widths") {
    const auto f1 = solve_fquad(1.0);
    const double A = 0.9;
    const auto law = fpp_limit_cdf(f1, 1.0, 1e-3, A);
    CHECK(law.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-6));

    // window scales as theta_near^{-2/3} theta_far^{-1/3}
    const double w0 = law.window();
    const auto law_n = fpp_limit_cdf(f1, 2.0, 1e-3, A);
    CHECK(law_n.window() / w0 == doctest::Approx(std::pow(2.0, -2.0 / 3.0)).epsilon(1e-9));
    const auto law_f = fpp_limit_cdf(f1, 1.0, 2e-3, A);
    CHECK(law_f.window() / w0 == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-9));

    // doubling the area compresses time by 2^{-1/3}
    const auto law_a = fpp_limit_cdf(f1, 1.0, 1e-3, 2.0 * A);
    CHECK(law_a.window() / w0 == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-9));

    CHECK_THROWS_AS(fpp_limit_cdf(f1, 0.0, 1e-3, A), std::invalid_argument);
}
