#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gossipfpp {

// The four network communication models. Torus distances are graph (L1)
// distances with periodic wrap.
struct Complete {
    std::int64_t n;
};

struct TorusNN {
    int N;
};

struct TorusShortLong {
    int N;
    double far_cost;  // c_N >= 1, the cost of one non-neighbor call
};

struct TorusDistanceCost {
    int N;
    std::vector<double> cost;  // cost[d-1] = c(d); c(1) = 1, nondecreasing
};

using Topology = std::variant<Complete, TorusNN, TorusShortLong, TorusDistanceCost>;

std::int64_t agent_count(const Topology& t);
std::string topology_name(const Topology& t);
void validate(const Topology& t);  // throws std::invalid_argument

// Per-topology call-rate parameters. The caller pays and pulls: an agent's
// rates govern only its own incoming-information channels.
struct RateScalar {
    double theta;
};

struct RateNearFar {
    double near;
    double far;
};

struct RateByDistance {
    std::vector<double> theta;  // theta[d-1] = rate of calls to distance d
};

using StrategyProfile = std::variant<RateScalar, RateNearFar, RateByDistance>;

double total_rate(const StrategyProfile& s);
// Cost per unit time of following the strategy on the given topology.
double strategy_cost(const Topology& t, const StrategyProfile& s);
// Shape compatibility + nonnegativity + "at least one positive rate".
void validate(const Topology& t, const StrategyProfile& s);

// A single deviating agent using different parameters of the same shape.
struct EgoDeviation {
    std::int64_t agent;
    StrategyProfile rates;
};

void validate(const Topology& t, const StrategyProfile& s,
              const std::optional<EgoDeviation>& ego);

// L1 distance on the N x N torus between flat indices a and b.
int torus_distance(int N, std::int64_t a, std::int64_t b);

// Offsets (as flat-index deltas is not possible; returns dx,dy pairs) at
// exact torus distance d, and their count n_d.
std::vector<std::pair<int, int>> torus_offsets_at_distance(int N, int d);

}  // namespace gossipfpp
