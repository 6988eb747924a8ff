#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gossipfpp/fquad.hpp"
#include "gossipfpp/reward.hpp"
#include "gossipfpp/topology.hpp"

namespace gossipfpp::nash {

// Monte-Carlo payoff of a single deviating agent ("ego") against a population
// profile: reward per item R(rank/n) minus ego's call costs per unit time.
// The same seed reuses the same percolation randomness across different ego
// rates (common random numbers); raising any of ego's rates can only lower
// ego's receipt time pathwise.
struct PayoffEstimate {
    double payoff = 0.0;
    double payoff_stderr = 0.0;
    double reward = 0.0;
    double reward_stderr = 0.0;
    double cost = 0.0;
    std::int64_t replicates = 0;
};

PayoffEstimate payoff_mc(const Topology& topology, const RewardSpec& spec,
                         const StrategyProfile& theta, const StrategyProfile& phi,
                         std::int64_t replicates, std::uint64_t seed,
                         int threads = 1);

struct BRSearch {
    double hi = 0.0;          // scan bracket [0, hi] for the scanned coordinate
    int grid = 9;
    std::int64_t replicates = 2000;
    int threads = 1;
    int refine_iters = 40;    // golden-section steps on the CRN payoff curve
};

struct BestResponse {
    double phi_star = 0.0;
    double payoff_at = 0.0;
    double payoff_stderr = 0.0;
    bool concave = true;      // empirical concavity check on the grid
    double curvature = 0.0;   // from a local quadratic fit (negative)
    std::vector<double> grid_phi, grid_payoff, grid_stderr;
};

// Best response in one channel of the strategy (channel 0 for scalar rates,
// 0 = near / 1 = far for the short-long torus, d-1 for distance d); ego's
// other channels stay at the population values.
BestResponse best_response(const Topology& topology, const RewardSpec& spec,
                           const StrategyProfile& theta, int channel,
                           const BRSearch& search, std::uint64_t seed);

enum class Classification { efficient, wasteful, totally_wasteful };
std::string to_string(Classification c);

// Trichotomy from the equilibrium payoff and cost relative to Rbar.
// Efficient when the equilibrium cost is negligible against Rbar, totally
// wasteful when the payoff itself is, wasteful in between; CI-ambiguous
// cases fall back to wasteful with the flag set.
struct ClassifyResult {
    Classification classification = Classification::wasteful;
    bool flagged = false;
};
ClassifyResult classify_payoff(double payoff, double payoff_stderr, double cost,
                               double rbar, double efficient_fraction = 0.15,
                               double totally_wasteful_fraction = 0.10);

struct NashOptions {
    std::int64_t replicates = 2000;
    int grid = 9;
    int max_iterations = 40;
    int min_iterations = 3;
    int threads = 1;
    double damping = 0.5;
    double rel_tol = 0.08;           // residual tolerance relative to the rate scale
    double efficient_fraction = 0.15;        // classification cutoffs vs Rbar
    double totally_wasteful_fraction = 0.10;
    std::int64_t classify_replicates = 0;  // 0: reuse `replicates`
};

struct IterationRecord {
    int iteration = 0;
    std::vector<double> theta;      // flattened profile
    std::vector<double> response;   // flattened best response
    double residual = 0.0;
};

struct NashEstimate {
    StrategyProfile strategy;
    double payoff = 0.0;
    double payoff_stderr = 0.0;
    double reward = 0.0;
    double cost = 0.0;
    Classification classification = Classification::wasteful;
    bool classification_flagged = false;
    double br_residual = 0.0;
    std::vector<IterationRecord> trace;
};

// Damped best-response iteration to a fixed point, with the classification
// efficient / wasteful / totally wasteful from the equilibrium payoff and
// cost relative to Rbar. Throws std::runtime_error (including the iteration
// trace) if the iteration cap is hit.
NashEstimate nash_fixed_point(const Topology& topology, const RewardSpec& spec,
                              const StrategyProfile& init, const NashOptions& opts,
                              std::uint64_t seed);

// Finite-k rewards on the complete graph (first k recipients get n/k each):
// Monte-Carlo equilibrium via the stage races for the first k receipts, with
// CRN staircase thresholds. O(k) work per replicate.
struct FiniteKNashMC {
    double theta = 0.0;
    double theta_stderr = 0.0;
    double payoff = 0.0;
    double payoff_stderr = 0.0;
};
FiniteKNashMC nash_finite_k_mc(std::int64_t n, std::int64_t k,
                               std::int64_t replicates, std::uint64_t seed,
                               int threads = 1);

// Short-long equilibrium from the limit equations, solved self-consistently:
//   c_far = K^{-1} I1           (K = A^{1/3} theta_far^{1/3} theta_near^{2/3})
//   theta_near^2 = K |z'(1)| I2
// with I1 = int (1-y) r(y) * int_{-inf}^{F1^{-1}(y)} F1, and
//      I2 = int r(u) F1'(F1^{-1}(u)) du.
// The positive root uses |z'(1)| (z' itself is negative).
struct ShortLongNash {
    double theta_near = 0.0;
    double theta_far = 0.0;
    double c_far = 0.0;
    double Q = 0.0;     // |z'(1)| I1 I2
    double area = 0.0;  // limit-shape area for the unit-rate near process
    double I1 = 0.0;
    double I2 = 0.0;
    double cost() const { return theta_near + c_far * theta_far; }
};
ShortLongNash nash_short_long(const RewardSpec& spec, double c_far, int N,
                              double area, double zprime1,
                              const fquad::FquadSolution& f1);

// Distance-cost efficiency experiment over a grid of torus sizes.
struct DistanceCostPoint {
    int N = 0;
    std::vector<double> theta;
    double payoff = 0.0;
    double payoff_stderr = 0.0;
    double cost = 0.0;
    double window_width = 0.0;
    int support_max = 0;  // largest distance with a rate above the shutoff level
    Classification classification = Classification::wasteful;
};
struct DistanceCostReport {
    std::vector<DistanceCostPoint> points;
    bool cost_decreasing = false;
    bool support_stable = false;
    bool window_growing = false;
};
DistanceCostReport distance_cost_efficiency(const RewardSpec& spec,
                                            const std::vector<double>& cost_table,
                                            const std::vector<int>& N_grid,
                                            const NashOptions& opts,
                                            std::uint64_t seed);

namespace detail {
// Ego receipt times under CRN (testing hook for the coupling property).
std::vector<double> ego_receipt_times(const Topology& topology,
                                      const StrategyProfile& theta,
                                      const StrategyProfile& phi,
                                      std::int64_t replicates, std::uint64_t seed);
}  // namespace detail

}  // namespace gossipfpp::nash
