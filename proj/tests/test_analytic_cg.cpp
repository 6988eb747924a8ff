#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "gossipfpp/analytic_cg.hpp"
#include "gossipfpp/reward.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

using namespace gossipfpp;
using namespace gossipfpp::analytic;

namespace {

// Independent quadrature oracle: plain composite Simpson, no adaptivity, no
// shared code with the library's integrators.
double simpson_oracle(const std::function<double(double)>& f, double a, double b,
                      int n = 20000) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x0 = a + i * h, x1 = x0 + h;
        s += (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1)) * h / 6.0;
    }
    return s;
}

// Regular-interval gossip on the complete graph: agent i calls a random other
// agent at times U_i, U_i + 1/theta, U_i + 2/theta, ... Simulation oracle for
// the fixed-point solver.
std::vector<double> regular_calls_simulation(std::int64_t n, double theta,
                                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> receipt(n, std::numeric_limits<double>::infinity());
    std::vector<char> informed(n, 0);
    const auto source = static_cast<std::int64_t>(rng.below(n));
    informed[source] = 1;
    receipt[source] = 0.0;
    using Ev = std::pair<double, std::int64_t>;
    std::priority_queue<Ev, std::vector<Ev>, std::greater<>> q;
    for (std::int64_t i = 0; i < n; ++i)
        if (!informed[i]) q.push({rng.uniform01() / theta, i});
    std::int64_t left = n - 1;
    while (left > 0 && !q.empty()) {
        auto [t, i] = q.top();
        q.pop();
        if (informed[i]) continue;
        auto j = static_cast<std::int64_t>(rng.below(n - 1));
        if (j >= i) ++j;
        if (informed[j]) {
            informed[i] = 1;
            receipt[i] = t;
            --left;
        } else {
            q.push({t + 1.0 / theta, i});
        }
    }
    return receipt;
}

}  // namespace

TEST_CASE("logistic and deviant laws") {
    const LogisticLaw f1{1.0};
    CHECK(f1.cdf(0.0) == doctest::Approx(0.5));
    CHECK(f1.quantile(0.9) - f1.quantile(0.1) == doctest::Approx(std::log(81.0)));
    const LogisticLaw f2{2.0};
    CHECK(f2.cdf(1.0) == doctest::Approx(f1.cdf(2.0)));

    // 1 - G = (1 - F_theta)^(phi/theta) at random points, to 1e-12
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const double theta = 0.1 + 3.0 * rng.uniform01();
        const double phi = 0.1 + 3.0 * rng.uniform01();
        const double x = -8.0 + 16.0 * rng.uniform01();
        const LogisticLaw f{theta};
        const DeviantLaw g{phi, theta};
        const double lhs = 1.0 - g.cdf(x);
        const double rhs = std::pow(1.0 - f.cdf(x), phi / theta);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("payoff_cg examples") {
    const auto lin = RewardSpec::linear();
    const auto thr = RewardSpec::threshold(0.3);

    // phi = theta: payoff is Rbar - theta
    CHECK(payoff_cg(lin, 0.7, 0.7) == doctest::Approx(1.0 - 0.7).epsilon(1e-9));
    CHECK(payoff_cg(thr, 0.41, 0.41) == doctest::Approx(1.0 - 0.41).epsilon(1e-9));

    // phi = 0: no calls, no reward, no cost
    CHECK(payoff_cg(lin, 0.0, 1.0) == 0.0);

    // linear, theta = 0.5, phi = 1: -1 + 4/3 = 1/3, cross-checked by the
    // Simpson oracle on the closed-form integrand
    const double direct = payoff_cg(lin, 1.0, 0.5);
    CHECK(direct == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    const double oracle =
        -1.0 + simpson_oracle([](double u) {
            return 2.0 * (1.0 - (1.0 - u) * (1.0 - u));
        }, 0.0, 1.0);
    CHECK(direct == doctest::Approx(oracle).epsilon(1e-8));

    CHECK_THROWS_AS(payoff_cg(lin, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("payoff_cg is concave in phi") {
    Rng rng(3);
    const RewardSpec specs[] = {RewardSpec::linear(), RewardSpec::threshold(0.25),
                                RewardSpec::table({0, 0.3, 1}, {3.0, 0.5, 0.0})};
    for (const auto& spec : specs) {
        for (double theta : {0.3, 1.0, 2.5}) {
            std::vector<double> vals;
            const double dphi = 0.05;
            for (int i = 0; i <= 60; ++i) vals.push_back(payoff_cg(spec, i * dphi, theta));
            for (std::size_t i = 1; i + 1 < vals.size(); ++i)
                CHECK(vals[i + 1] - 2 * vals[i] + vals[i - 1] <= 1e-9);
        }
    }
}

TEST_CASE("nash_cg examples and consistency") {
    CHECK(nash_cg(RewardSpec::linear()) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(nash_cg(RewardSpec::constant()) == doctest::Approx(0.0).epsilon(1e-10));

    // threshold at u0 = 1 - 1/e: exact antiderivative gives 1/(e-1)
    const double u0 = 1.0 - 1.0 / M_E;
    const double expected = 1.0 / (M_E - 1.0);  // = 1 + (2/e - 1)/(1 - 1/e)
    CHECK(nash_cg(RewardSpec::threshold(u0)) == doctest::Approx(expected).epsilon(1e-10));
    // antiderivative oracle: (1/u0) * integral_0^u0 (1 + log(1-u)) du with
    // integral log(1-u) du = (1-u) - (1-u) log(1-u)
    auto anti = [](double u) { return u + ((1 - u) - (1 - u) * std::log(1 - u)); };
    const double oracle = (anti(u0) - anti(0.0)) / u0;
    CHECK(nash_cg(RewardSpec::threshold(u0)) == doctest::Approx(oracle).epsilon(1e-10));

    // stationarity: d payoff / d phi vanishes at the equilibrium
    for (const auto& spec : {RewardSpec::linear(), RewardSpec::threshold(0.2),
                             RewardSpec::table({0, 0.5, 1}, {2.5, 1.0, 0.0})}) {
        const double tn = nash_cg(spec);
        CHECK(std::abs(payoff_cg_dphi(spec, tn, tn)) < 1e-8);
        // numeric argmax of payoff(., tn) sits at tn
        double best_phi = 0, best_val = -1e300;
        for (int i = 0; i <= 400; ++i) {
            const double phi = i * 0.005;
            const double v = payoff_cg(spec, phi, tn);
            if (v > best_val) {
                best_val = v;
                best_phi = phi;
            }
        }
        CHECK(best_phi == doctest::Approx(tn).epsilon(0.02));
    }
}

TEST_CASE("nash_cg bounds for strictly decreasing rewards") {
    Rng rng(41);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<double> u{0.0}, R;
        const int segs = 2 + static_cast<int>(rng.below(5));
        for (int i = 1; i < segs; ++i) u.push_back(rng.uniform01());
        u.push_back(1.0);
        std::sort(u.begin(), u.end());
        for (std::size_t i = 1; i < u.size(); ++i)
            if (u[i] <= u[i - 1]) u[i] = u[i - 1] + 1e-5;
        u.back() = 1.0;
        double level = 0.5 + 4.0 * rng.uniform01();
        for (std::size_t i = 0; i + 1 < u.size(); ++i) {
            R.push_back(level);
            level *= 0.2 + 0.6 * rng.uniform01();
        }
        R.push_back(0.0);
        const auto spec = RewardSpec::table(u, R);
        const double tn = nash_cg(spec);
        CHECK(tn > 0.0);
        CHECK(tn < spec.rbar());
    }
}

TEST_CASE("threshold rewards grow more wasteful as the rewarded fraction shrinks") {
    // equilibrium payoff 1 - theta(u0) decreases toward 0 as u0 -> 0
    double prev = 1.0;
    for (double u0 : {0.5, 0.2, 0.05, 0.01}) {
        const double payoff = 1.0 - nash_cg(RewardSpec::threshold(u0));
        CHECK(payoff > 0.0);
        CHECK(payoff < prev);
        prev = payoff;
    }
    CHECK(prev < 0.01);  // nearly all surplus burned at u0 = 0.01
}

TEST_CASE("g kernel properties") {
    CHECK(g_kernel(1e-12) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g_kernel(1.0 - 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
    Rng rng(77);
    for (int i = 0; i < 500; ++i) {
        const double u = 1e-6 + (1 - 2e-6) * rng.uniform01();
        CHECK(g_kernel(u) > 0.0);
        CHECK(g_kernel(u) <= 1.0 / M_E + 1e-12);
    }
    const double u_star = 1.0 - 1.0 / M_E;
    CHECK(g_kernel(u_star) == doctest::Approx(1.0 / M_E).epsilon(1e-12));
}

TEST_CASE("finite-k equilibrium") {
    // direct substitution: k=2, n=3, w=3/2
    const auto small = nash_finite_k(3, 2);
    CHECK(small.theta == doctest::Approx(0.375).epsilon(1e-12));

    // matches the displayed k=2 closed form for several n
    for (std::int64_t n : {10, 100, 10000}) {
        const double w = n / 2.0;
        const double closed = (n - 2) * w / static_cast<double>((n - 1)) /
                              static_cast<double>(n - 1);
        CHECK(nash_finite_k(n, 2).theta == doctest::Approx(closed).epsilon(1e-12));
    }

    // limits: payoff -> 1/2 for k=2 and 1/k in general
    CHECK(nash_finite_k(1000000, 2).payoff == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(nash_finite_k(1000000, 5).payoff == doctest::Approx(0.2).epsilon(1e-4));
    CHECK(nash_finite_k(1000000, 5).theta == doctest::Approx(0.8).epsilon(1e-4));
    CHECK(nash_finite_k(1000000, 50).payoff == doctest::Approx(0.02).epsilon(1e-2));

    CHECK_THROWS_AS(nash_finite_k(5, 5), std::invalid_argument);
    CHECK_THROWS_AS(nash_finite_k(5, 6), std::invalid_argument);
    CHECK_THROWS_AS(nash_finite_k(5, 1), std::invalid_argument);
}

TEST_CASE("prob_second") {
    CHECK(prob_second(4, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (std::int64_t n : {3, 7, 100})
        CHECK(prob_second(n, 1.3, 1.3) == doctest::Approx(1.0 / (n - 1)).epsilon(1e-12));
    CHECK(prob_second(10, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS(prob_second(2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(prob_second(5, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("symmetric variant halves the rate") {
    CHECK(nash_symmetric(0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(nash_symmetric(0.0) == 0.0);
    const double audience = nash_audience(1.0);
    CHECK(nash_symmetric(audience) == doctest::Approx(0.5 * audience).epsilon(1e-15));
    CHECK_THROWS_AS(nash_symmetric(-1.0), std::invalid_argument);
}

TEST_CASE("audience-size rewards") {
    // series oracle: sum 1/(m^2 (m+1)) = pi^2/6 - 1
    double series = 0.0;
    for (int m = 1; m <= 2000000; ++m)
        series += 1.0 / (static_cast<double>(m) * m * (m + 1.0));
    // tail of the series is below 1e-13 at this cutoff
    const double v1 = nash_audience(1.0);
    CHECK(std::abs(v1 - series) < 1e-8);
    CHECK(v1 == doctest::Approx(M_PI * M_PI / 6.0 - 1.0).epsilon(1e-10));
    CHECK(nash_audience(2.0) == doctest::Approx(2.0 * v1).epsilon(1e-12));
    CHECK_THROWS_AS(nash_audience(0.0), std::invalid_argument);
    CHECK_THROWS_AS(nash_audience(-2.0), std::invalid_argument);
}

TEST_CASE("regular-interval fixed point: CDF shape and scaling") {
    const auto sol = regular_calls_fixed_point(1.0);
    CHECK(sol.residual < 1e-6);
    CHECK(std::is_sorted(sol.F.begin(), sol.F.end()));
    CHECK(sol.F.front() < 1e-3);
    CHECK(sol.F.back() > 1.0 - 1e-3);
    CHECK(sol.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-6));

    const auto sol2 = regular_calls_fixed_point(2.0, {-5.0, 3.0, 1.0 / 128.0});
    double sup = 0.0;
    for (double t = -4.0; t <= 2.5; t += 0.01)
        sup = std::max(sup, std::abs(sol2.cdf(t) - sol.cdf(2.0 * t)));
    CHECK(sup < 1e-6);

    CHECK_THROWS_AS(regular_calls_fixed_point(0.0), std::invalid_argument);
    CHECK_THROWS_AS(regular_calls_fixed_point(1.0, {-0.5, 0.5, 1.0 / 64}),
                    std::invalid_argument);
}

TEST_CASE("regular-interval fixed point matches simulation") {
    const auto sol = regular_calls_fixed_point(1.0);
    std::vector<double> pooled;
    for (int rep = 0; rep < 6; ++rep) {
        auto receipt = regular_calls_simulation(10000, 1.0, seed_mix({321, (std::uint64_t)rep}));
        std::sort(receipt.begin(), receipt.end());
        const double med = stats::quantile_sorted(receipt, 0.5);
        for (double t : receipt) pooled.push_back(t - med);
    }
    std::sort(pooled.begin(), pooled.end());
    const double ks = stats::ks_distance_sorted(
        pooled, [&](double t) { return sol.cdf(t); });
    CHECK(ks < 0.03);
}
