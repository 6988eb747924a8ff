#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "gossipfpp/topology.hpp"

namespace gossipfpp {

// Receipt times and ranks for one percolated item.
struct RunResult {
    std::vector<double> receipt;     // per agent; +inf when never informed
    std::vector<std::int64_t> rank;  // permutation of 1..n, rank[source] = 1
    std::int64_t source = -1;
    std::uint64_t seed = 0;

    // One row per agent: id, receipt_time, rank.
    void write_csv(std::ostream& os) const;
};

// Spread of one item as first passage percolation / SI epidemic with the
// model's receiver-side rates. The caller pulls: an agent's own rates govern
// only the channels that inform it, so ego's deviation never changes other
// agents' receipt behavior except through ego's own receipt.
//
// The source agent is drawn uniformly at random from the seed. Identical
// (topology, profile, ego, seed) give identical results.
RunResult percolate(const Topology& topology, const StrategyProfile& profile,
                    const std::optional<EgoDeviation>& ego, std::uint64_t seed);

struct SpreadStats {
    std::vector<double> sorted_times;  // empirical CDF support
    double lo = 0.1, hi = 0.9;
    double width = 0.0;  // t(hi) - t(lo)

    double quantile(double q) const;
    double cdf(double t) const;
};

// Window width between the lo and hi quantiles of the receipt times.
SpreadStats spread_stats(const RunResult& run, double lo = 0.1, double hi = 0.9);

// Rank and receipt time of one agent, with the run stopped at its receipt.
// Shares the random stream layout with percolate: the same seed yields the
// same trajectory prefix.
struct TargetOutcome {
    std::int64_t rank;  // informing order; agent_count if never informed
    double time;        // +inf if never informed
};
TargetOutcome percolate_rank_of(const Topology& topology,
                                const StrategyProfile& profile,
                                const std::optional<EgoDeviation>& ego,
                                std::uint64_t seed, std::int64_t target);

// Empirical distribution of ego's normalized rank (rank / agent count), one
// sample per replicate. Replicate seeds derive from the master seed; results
// are independent of the worker count.
std::vector<double> ego_rank_distribution(const Topology& topology,
                                          const StrategyProfile& profile,
                                          const EgoDeviation& ego,
                                          std::int64_t replicates,
                                          std::uint64_t seed, int threads = 1);

}  // namespace gossipfpp
