#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gossipfpp/reward.hpp"
#include "gossipfpp/stats.hpp"

namespace gossipfpp::lattice {

// Monte-Carlo estimates for rate-1 nearest-neighbor FPP on the plane and
// torus: the limit-shape area A, the torus coverage profile q(s) (fraction of
// the N-torus wetted by time sN), and the boundary radius of the limit shape
// by direction.
struct ShapeEstimate {
    double area = 0.0;
    double area_stderr = 0.0;
    double area_half_time = 0.0;  // same estimate at s_max/2 (convergence check)
    double s_max = 0.0;
    int L = 0;

    // torus coverage profile q(s) with q(s) -> 1 once the wetted set wraps
    std::vector<double> q_s;
    std::vector<double> q_vals;
    stats::MonotoneCubic q_spline;

    // growth-rate bounds: the wetted set contains the L1 ball of radius
    // v_lower * s and is contained in the L1 ball of radius v_upper * s
    double v_lower = 0.0;
    double v_upper = 0.0;

    // boundary radius of the scaled wetted set, binned by direction
    std::vector<double> radius_by_angle;

    // scaled wetted set of the first replicate (diagnostics)
    std::vector<std::pair<double, double>> final_set;

    double q(double s) const;
    double q_inv(double u) const;
    double V(double u) const;  // q'(q^{-1}(u))
    double rho_radius(double angle) const;
    double max_radius() const;
};

ShapeEstimate estimate_shape(int L, double s_max, int replicates,
                             std::uint64_t seed, int threads = 1,
                             int q_torus_N = 96, int q_replicates = 32);

// Relative receipt times of the four neighbors of the origin when percolation
// starts at rho-distance ~ r, with the origin's own pulls disabled so paths
// avoid it. min_i tau_i = 0 by construction.
struct TauSample {
    std::array<double, 4> tau;
    double r = 0.0;
    double angle = 0.0;  // source direction (kept: tau may depend on it)
};

inline constexpr double kTauMinDistance = 32.0;

std::vector<TauSample> sample_tau(double r, int replicates,
                                  const ShapeEstimate& shape, std::uint64_t seed,
                                  int threads = 1);

// Coupled deviation functional Z(lambda) = min_i(tau_i + xi_i/lambda)
//                                        - min_i(tau_i + xi_i),
// with one Exponential(1) four-vector xi per replicate reused across the
// whole lambda grid (common random numbers).
struct UBin {
    double lo = 0.0, hi = 0.0;
    double g = 0.0;         // -d/dlambda E(V Z(lambda) | U in bin) at 1
    double g_stderr = 0.0;
    std::int64_t count = 0;
};

struct ZLambdaEstimate {
    std::vector<double> lambdas;
    std::vector<double> z;
    std::vector<double> z_stderr;
    double zprime1 = 0.0;  // central difference, Richardson-extrapolated
    double zprime1_stderr = 0.0;
    std::vector<UBin> bins;  // filled when a shape estimate is supplied

    // pathwise coupling checks accumulated over all replicates
    std::int64_t monotone_violations = 0;  // Z must not increase in lambda
    double max_abs_z_at_1 = 0.0;           // Z(1) is 0 by construction
};

ZLambdaEstimate estimate_z(const std::vector<TauSample>& taus,
                           std::vector<double> lambda_grid,
                           std::int64_t replicates, std::uint64_t seed,
                           const ShapeEstimate* shape = nullptr, int n_bins = 10);

// Equilibrium rate on the N x N torus: N^{-1} * sum over u-bins of
// g(u) * (r-measure of the bin).
double nash_torus_nn(const RewardSpec& spec, const ShapeEstimate& shape,
                     const ZLambdaEstimate& z, int N);

// KS distance between Uniform(0,1) and the normalized wetted count at the
// first time a neighbor of a fixed vertex is wetted (origin pulls disabled).
double uniform_rank_check(int N, std::int64_t replicates, std::uint64_t seed,
                          int threads = 1);

}  // namespace gossipfpp::lattice
