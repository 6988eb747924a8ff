#include <doctest.h>

#include <cmath>
#include <vector>

#include "gossipfpp/quadrature.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

using namespace gossipfpp;

TEST_CASE("rng determinism and basic moments") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    Rng r(7);
    stats::RunningStat s;
    for (int i = 0; i < 200000; ++i) s.add(r.exponential(2.0));
    CHECK(s.mean() == doctest::Approx(0.5).epsilon(0.01));

    // below(n) is unbiased over small ranges
    std::vector<std::size_t> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
    CHECK(stats::chi_square_uniform_pvalue(counts) > 1e-4);
}

TEST_CASE("seed_mix separates streams") {
    CHECK(seed_mix({1, 2}) != seed_mix({2, 1}));
    CHECK(seed_mix({1, 0}) != seed_mix({1, 1}));
}

TEST_CASE("running stat merge is order independent") {
    Rng r(3);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = r.uniform01();
    stats::RunningStat all, left, right;
    for (int i = 0; i < 1000; ++i) (i < 400 ? left : right).add(xs[i]);
    for (double x : xs) all.add(x);
    stats::RunningStat merged = left;
    merged.merge(right);
    CHECK(merged.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
    CHECK(merged.variance() == doctest::Approx(all.variance()).epsilon(1e-10));
}

TEST_CASE("quantiles and KS") {
    std::vector<double> xs;
    for (int i = 1; i <= 100; ++i) xs.push_back(i / 100.0);
    CHECK(stats::quantile_sorted(xs, 0.1) == doctest::Approx(0.10));
    CHECK(stats::quantile_sorted(xs, 0.9) == doctest::Approx(0.90));
    CHECK(stats::ks_uniform_sorted(xs) == doctest::Approx(0.01).epsilon(1e-9));

    Rng r(9);
    std::vector<double> u(20000);
    for (auto& x : u) x = r.uniform01();
    std::sort(u.begin(), u.end());
    CHECK(stats::ks_uniform_sorted(u) < 0.015);
}

TEST_CASE("ols recovers exact slopes") {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(3.0 - 2.0 * v);
    auto fit = stats::ols(x, y);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.slope_stderr == doctest::Approx(0.0).epsilon(1e-10));

    std::vector<double> lx{2, 4, 8, 16}, ly;
    for (double v : lx) ly.push_back(5.0 * std::pow(v, -1.5));
    auto llog = stats::log_log_slope(lx, ly);
    CHECK(llog.slope == doctest::Approx(-1.5).epsilon(1e-10));
}

TEST_CASE("gamma_q against known values") {
    // Q(1, x) = exp(-x)
    CHECK(stats::gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
    // chi-square df=2: p = exp(-stat/2)
    CHECK(stats::chi_square_pvalue(4.0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
    // median of chi-square df=1 is ~0.4549
    CHECK(stats::chi_square_pvalue(0.4549364, 1) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("monotone cubic interpolation") {
    std::vector<double> x{0, 1, 2, 3, 4}, y{0, 0.1, 0.5, 0.9, 1.0};
    stats::MonotoneCubic mc(x, y);
    for (int i = 0; i < 5; ++i) CHECK(mc(x[i]) == doctest::Approx(y[i]).epsilon(1e-12));
    // interpolant stays monotone
    double prev = -1;
    for (double t = 0; t <= 4.0; t += 0.01) {
        const double v = mc(t);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK(mc.inverse(0.5) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(mc.derivative(2.0) >= 0.0);
}

TEST_CASE("quadrature handles endpoint log singularities") {
    using quad::tanh_sinh;
    // integral of -log(1-u) over (0,1) = 1
    CHECK(tanh_sinh([](double u) { return -std::log(1 - u); }, 0, 1) ==
          doctest::Approx(1.0).epsilon(1e-10));
    // integral of -(1-u) log(1-u) = 1/4
    CHECK(tanh_sinh([](double u) { return -(1 - u) * std::log(1 - u); }, 0, 1) ==
          doctest::Approx(0.25).epsilon(1e-10));
    // integral of -((1-y)/y) log(1-y) = pi^2/6 - 1
    const double target = M_PI * M_PI / 6.0 - 1.0;
    CHECK(tanh_sinh([](double y) { return -(1 - y) / y * std::log(1 - y); }, 0, 1) ==
          doctest::Approx(target).epsilon(1e-10));

    CHECK(quad::adaptive_simpson([](double x) { return std::sin(x); }, 0, M_PI) ==
          doctest::Approx(2.0).epsilon(1e-9));
}
