#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gossipfpp/fpp_engine.hpp"
#include "gossipfpp/parallel.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

using namespace gossipfpp;

namespace {

double logistic_cdf(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Brute-force oracle: complete-graph FPP as Dijkstra over explicitly sampled
// directed edge weights Exponential(theta/(n-1)) into each receiving agent.
// Independent of the engine's race representation.
std::vector<double> cg_dijkstra_oracle(int n, double theta, Rng& rng) {
    const double rate = theta / static_cast<double>(n - 1);
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (u != v) w[u][v] = rng.exp1() / rate;  // edge u -> v informs v
    const auto source = static_cast<int>(rng.below(n));
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    dist[source] = 0.0;
    for (int it = 0; it < n; ++it) {
        int best = -1;
        for (int v = 0; v < n; ++v)
            if (!done[v] && (best < 0 || dist[v] < dist[best])) best = v;
        done[best] = 1;
        for (int v = 0; v < n; ++v)
            if (!done[v]) dist[v] = std::min(dist[v], dist[best] + w[best][v]);
    }
    return dist;
}

std::vector<double> sorted_gaps(std::vector<double> times) {
    std::sort(times.begin(), times.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < times.size(); ++i)
        gaps.push_back(times[i] - times[i - 1]);
    return gaps;
}

}  // namespace

TEST_CASE("two agents: receipt gap is Exponential(theta)") {
    const Topology top = Complete{2};
    const StrategyProfile prof = RateScalar{1.0};
    stats::RunningStat gap;
    for (int rep = 0; rep < 100000; ++rep) {
        const auto run = percolate(top, prof, std::nullopt, seed_mix({99, (std::uint64_t)rep}));
        gap.add(std::max(run.receipt[0], run.receipt[1]));
    }
    CHECK(gap.mean() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("determinism: identical inputs give identical RunResult") {
    const Topology tops[] = {Topology{Complete{300}}, Topology{TorusNN{12}},
                             Topology{TorusShortLong{12, 50.0}},
                             Topology{TorusDistanceCost{12, {1.0, 2.0, 4.0}}}};
    const StrategyProfile profs[] = {
        StrategyProfile{RateScalar{0.7}}, StrategyProfile{RateScalar{1.3}},
        StrategyProfile{RateNearFar{1.0, 0.01}},
        StrategyProfile{RateByDistance{{0.5, 0.2, 0.1}}}};
    for (int i = 0; i < 4; ++i) {
        const auto a = percolate(tops[i], profs[i], std::nullopt, 1234);
        const auto b = percolate(tops[i], profs[i], std::nullopt, 1234);
        CHECK(a.receipt == b.receipt);
        CHECK(a.rank == b.rank);
        CHECK(a.source == b.source);
        const auto c = percolate(tops[i], profs[i], std::nullopt, 1235);
        CHECK(a.receipt != c.receipt);
    }
}

TEST_CASE("rank invariants: permutation, source first, nondecreasing times") {
    Rng seeds(2024);
    const Topology tops[] = {Topology{Complete{97}}, Topology{TorusNN{9}},
                             Topology{TorusShortLong{9, 10.0}},
                             Topology{TorusDistanceCost{9, {1.0, 3.0}}}};
    const StrategyProfile profs[] = {
        StrategyProfile{RateScalar{1.1}}, StrategyProfile{RateScalar{0.9}},
        StrategyProfile{RateNearFar{0.8, 0.05}},
        StrategyProfile{RateByDistance{{0.6, 0.3}}}};
    for (int i = 0; i < 4; ++i) {
        for (int rep = 0; rep < 5; ++rep) {
            std::optional<EgoDeviation> ego;
            if (rep % 2 == 1) {
                StrategyProfile dev = profs[i];
                if (auto* s = std::get_if<RateScalar>(&dev)) s->theta *= 2.0;
                if (auto* s = std::get_if<RateNearFar>(&dev)) s->near *= 2.0;
                if (auto* s = std::get_if<RateByDistance>(&dev)) s->theta[0] *= 2.0;
                ego = EgoDeviation{static_cast<std::int64_t>(rep) + 1, dev};
            }
            const auto run = percolate(tops[i], profs[i], ego, seeds.next());
            const auto n = static_cast<std::int64_t>(run.receipt.size());
            std::vector<char> seen(n, 0);
            for (auto r : run.rank) {
                REQUIRE(r >= 1);
                REQUIRE(r <= n);
                CHECK(!seen[r - 1]);
                seen[r - 1] = 1;
            }
            CHECK(run.rank[run.source] == 1);
            CHECK(run.receipt[run.source] == 0.0);
            std::vector<double> by_rank(n);
            for (std::int64_t a = 0; a < n; ++a) by_rank[run.rank[a] - 1] = run.receipt[a];
            CHECK(std::is_sorted(by_rank.begin(), by_rank.end()));
        }
    }
}

TEST_CASE("time scaling: doubling all rates halves all receipt times pathwise") {
    const std::uint64_t seed = 777;
    {
        const auto a = percolate(Complete{200}, RateScalar{0.6}, std::nullopt, seed);
        const auto b = percolate(Complete{200}, RateScalar{1.2}, std::nullopt, seed);
        for (std::size_t i = 0; i < a.receipt.size(); ++i)
            CHECK(a.receipt[i] == 2.0 * b.receipt[i]);
    }
    {
        const auto a = percolate(TorusNN{10}, RateScalar{0.6}, std::nullopt, seed);
        const auto b = percolate(TorusNN{10}, RateScalar{1.2}, std::nullopt, seed);
        for (std::size_t i = 0; i < a.receipt.size(); ++i)
            CHECK(a.receipt[i] == 2.0 * b.receipt[i]);
    }
    {
        const auto a = percolate(TorusShortLong{10, 30.0}, RateNearFar{0.6, 0.02},
                                 std::nullopt, seed);
        const auto b = percolate(TorusShortLong{10, 30.0}, RateNearFar{1.2, 0.04},
                                 std::nullopt, seed);
        for (std::size_t i = 0; i < a.receipt.size(); ++i)
            CHECK(a.receipt[i] == 2.0 * b.receipt[i]);
    }
    {
        const auto a = percolate(TorusDistanceCost{10, {1, 2, 3}},
                                 RateByDistance{{0.5, 0.25, 0.125}}, std::nullopt, seed);
        const auto b = percolate(TorusDistanceCost{10, {1, 2, 3}},
                                 RateByDistance{{1.0, 0.5, 0.25}}, std::nullopt, seed);
        for (std::size_t i = 0; i < a.receipt.size(); ++i)
            CHECK(a.receipt[i] == 2.0 * b.receipt[i]);
    }
}

TEST_CASE("pull semantics: ego's rate change cannot affect others when ego is last") {
    // Complete graph
    {
        const Topology top = Complete{40};
        const StrategyProfile prof = RateScalar{1.0};
        int matched = 0;
        for (int s = 0; s < 1500 && matched < 20; ++s) {
            const std::uint64_t seed = seed_mix({4242, (std::uint64_t)s});
            const auto slow = percolate(top, prof, EgoDeviation{7, RateScalar{0.5}}, seed);
            const auto fast = percolate(top, prof, EgoDeviation{7, RateScalar{1.0}}, seed);
            // extra calls only help, for everyone
            for (std::size_t i = 0; i < slow.receipt.size(); ++i)
                CHECK(fast.receipt[i] <= slow.receipt[i] + 1e-12);
            if (slow.rank[7] == 40 && fast.rank[7] == 40) {
                ++matched;
                for (std::size_t i = 0; i < slow.receipt.size(); ++i)
                    if (i != 7) CHECK(slow.receipt[i] == fast.receipt[i]);
            }
        }
        CHECK(matched > 0);
    }
    // Nearest-neighbor torus
    {
        const Topology top = TorusNN{6};
        const StrategyProfile prof = RateScalar{1.0};
        int matched = 0;
        for (int s = 0; s < 1500 && matched < 20; ++s) {
            const std::uint64_t seed = seed_mix({515, (std::uint64_t)s});
            const auto slow = percolate(top, prof, EgoDeviation{5, RateScalar{0.5}}, seed);
            const auto fast = percolate(top, prof, EgoDeviation{5, RateScalar{1.0}}, seed);
            for (std::size_t i = 0; i < slow.receipt.size(); ++i)
                CHECK(fast.receipt[i] <= slow.receipt[i] + 1e-12);
            if (slow.rank[5] == 36 && fast.rank[5] == 36) {
                ++matched;
                for (std::size_t i = 0; i < slow.receipt.size(); ++i)
                    if (i != 5) CHECK(slow.receipt[i] == fast.receipt[i]);
            }
        }
        CHECK(matched > 0);
    }
}

TEST_CASE("complete graph matches the brute-force Dijkstra oracle (n <= 6)") {
    const int n = 5;
    const double theta = 1.0;
    const int reps = 4000;
    std::vector<std::vector<double>> engine_gaps(n - 1), oracle_gaps(n - 1);
    Rng orng(31337);
    for (int rep = 0; rep < reps; ++rep) {
        const auto run = percolate(Complete{n}, RateScalar{theta}, std::nullopt,
                                   seed_mix({1, (std::uint64_t)rep}));
        const auto eg = sorted_gaps(run.receipt);
        const auto og = sorted_gaps(cg_dijkstra_oracle(n, theta, orng));
        for (int j = 0; j < n - 1; ++j) {
            engine_gaps[j].push_back(eg[j]);
            oracle_gaps[j].push_back(og[j]);
        }
    }
    for (int j = 1; j <= n - 1; ++j) {
        // Markov-chain gap j -> j+1 informed: Exponential(j(n-j)/(n-1))
        const double mean = static_cast<double>(n - 1) / (j * (n - j));
        auto e = stats::mean_var(engine_gaps[j - 1]);
        auto o = stats::mean_var(oracle_gaps[j - 1]);
        CHECK(std::abs(e.mean - mean) < 4.0 * e.stderr_mean());
        CHECK(std::abs(o.mean - mean) < 4.0 * o.stderr_mean());
        std::sort(engine_gaps[j - 1].begin(), engine_gaps[j - 1].end());
        std::sort(oracle_gaps[j - 1].begin(), oracle_gaps[j - 1].end());
        CHECK(stats::ks_two_sample_sorted(engine_gaps[j - 1], oracle_gaps[j - 1]) < 0.05);
    }
}

TEST_CASE("complete graph: recentered receipt CDF approaches the logistic law") {
    const std::int64_t n = 10000;
    std::vector<double> pooled;
    for (int rep = 0; rep < 30; ++rep) {
        auto run = percolate(Complete{n}, RateScalar{1.0}, std::nullopt,
                             seed_mix({7000, (std::uint64_t)rep}));
        std::sort(run.receipt.begin(), run.receipt.end());
        const double med = stats::quantile_sorted(run.receipt, 0.5);
        for (double t : run.receipt) pooled.push_back(t - med);
    }
    std::sort(pooled.begin(), pooled.end());
    CHECK(stats::ks_distance_sorted(pooled, logistic_cdf) < 0.03);
}

TEST_CASE("spread_stats window and errors") {
    RunResult run;
    run.receipt = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
    run.rank = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    run.source = 0;
    const auto s = spread_stats(run, 0.1, 0.9);
    CHECK(s.quantile(0.1) == doctest::Approx(0.0));
    CHECK(s.quantile(0.9) == doctest::Approx(8.0));
    CHECK(s.width == doctest::Approx(8.0));
    CHECK(s.cdf(4.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(spread_stats(run, 0.9, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(spread_stats(run, 0.5, 0.5), std::invalid_argument);
    const auto tiny = spread_stats(run, 0.5 - 1e-9, 0.5 + 1e-9);
    CHECK(tiny.width <= 1.0 + 1e-12);
}

TEST_CASE("complete graph window width approaches log 81 / theta") {
    // 10-90 quantile spread of the logistic law is 2 log 9 = log 81.
    const double log81 = std::log(81.0);
    for (double theta : {1.0, 2.0}) {
        stats::RunningStat w;
        for (int rep = 0; rep < 12; ++rep) {
            const auto run = percolate(Complete{20000}, RateScalar{theta}, std::nullopt,
                                       seed_mix({808, (std::uint64_t)rep, (std::uint64_t)(theta * 2)}));
            w.add(spread_stats(run).width);
        }
        CHECK(w.mean() == doctest::Approx(log81 / theta).epsilon(0.03));
    }
}

TEST_CASE("complete graph window width is bounded in n") {
    auto mean_width = [](std::int64_t n, int reps) {
        stats::RunningStat w;
        for (int rep = 0; rep < reps; ++rep) {
            const auto run = percolate(Complete{n}, RateScalar{1.0}, std::nullopt,
                                       seed_mix({909, (std::uint64_t)n, (std::uint64_t)rep}));
            w.add(spread_stats(run).width);
        }
        return w.mean();
    };
    const double w_small = mean_width(4000, 20);
    const double w_big = mean_width(32000, 10);
    CHECK(w_big / w_small == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("torus window width grows linearly in N") {
    auto mean_width = [](int N, int reps) {
        stats::RunningStat w;
        for (int rep = 0; rep < reps; ++rep) {
            const auto run = percolate(TorusNN{N}, RateScalar{1.0}, std::nullopt,
                                       seed_mix({606, (std::uint64_t)N, (std::uint64_t)rep}));
            w.add(spread_stats(run).width);
        }
        return w.mean();
    };
    const double w24 = mean_width(24, 50);
    const double w48 = mean_width(48, 25);
    CHECK(w48 / w24 == doctest::Approx(2.0).epsilon(0.20));
}

TEST_CASE("deviant rank law on the complete graph") {
    const std::int64_t n = 4000;
    const EgoDeviation ego{123, RateScalar{2.0}};
    const auto ranks = ego_rank_distribution(Complete{n}, RateScalar{1.0}, ego, 4000,
                                             2468, default_threads());
    auto sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (double u : {0.25, 0.5, 0.75}) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), u);
        const double emp = static_cast<double>(it - sorted.begin()) / sorted.size();
        const double expect = 1.0 - (1.0 - u) * (1.0 - u);
        CHECK(emp == doctest::Approx(expect).epsilon(0.04));
    }
}

TEST_CASE("ego with matching rate has uniform normalized rank") {
    const std::int64_t n = 2000;
    const EgoDeviation ego{55, RateScalar{1.0}};
    auto ranks = ego_rank_distribution(Complete{n}, RateScalar{1.0}, ego, 5000, 13579,
                                       default_threads());
    std::sort(ranks.begin(), ranks.end());
    CHECK(stats::ks_uniform_sorted(ranks) < 0.03);
}

TEST_CASE("fixed vertex rank on the torus is uniform (chi-square, N=8)") {
    // the fixed vertex is an ego whose rate matches the population
    const int N = 8;
    const int reps = 20000;
    const auto ranks = ego_rank_distribution(TorusNN{N}, RateScalar{1.0},
                                             EgoDeviation{0, RateScalar{1.0}}, reps,
                                             911, default_threads());
    std::vector<std::size_t> counts(N * N, 0);
    for (const double r : ranks)
        ++counts[static_cast<std::size_t>(std::llround(r * N * N)) - 1];
    CHECK(stats::chi_square_uniform_pvalue(counts) > 0.001);
}

TEST_CASE("zero-rate ego never receives; rank equals agent count") {
    const auto out = percolate_rank_of(Complete{50}, RateScalar{1.0},
                                       EgoDeviation{3, RateScalar{0.0}}, 4321, 3);
    CHECK(out.rank == 50);
    CHECK(std::isinf(out.time));
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(percolate(Complete{50}, RateScalar{0.0}, std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(percolate(Complete{1}, RateScalar{1.0}, std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(percolate(Complete{50}, RateNearFar{1.0, 0.1}, std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        percolate(Complete{50}, RateScalar{1.0}, EgoDeviation{50, RateScalar{1.0}}, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        percolate(Complete{50}, RateScalar{1.0}, EgoDeviation{-1, RateScalar{1.0}}, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(percolate(TorusShortLong{2, 5.0}, RateNearFar{1.0, 0.1},
                              std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(percolate(TorusDistanceCost{8, {2.0}}, RateByDistance{{1.0}},
                              std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(percolate(TorusDistanceCost{8, {1.0}}, RateByDistance{{1.0, 0.5}},
                              std::nullopt, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(percolate(TorusNN{8}, RateScalar{-1.0}, std::nullopt, 1),
                    std::invalid_argument);
}

TEST_CASE("csv serialization has the documented schema") {
    const auto run = percolate(Complete{4}, RateScalar{1.0}, std::nullopt, 5);
    std::ostringstream os;
    run.write_csv(os);
    const std::string text = os.str();
    CHECK(text.rfind("agent,receipt_time,rank\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
