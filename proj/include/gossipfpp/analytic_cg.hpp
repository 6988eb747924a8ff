#pragma once

#include <cstdint>
#include <vector>

#include "gossipfpp/reward.hpp"

namespace gossipfpp::analytic {

// Limiting spread law on the complete graph: recentered receipt times of
// random agents are logistic, F_theta(x) = F1(theta x) with
// F1(x) = e^x / (1 + e^x).
struct LogisticLaw {
    double theta = 1.0;
    double cdf(double x) const;
    double quantile(double q) const;
};

// Receipt-time law of an agent calling at rate phi against a population at
// rate theta: 1 - G = (1 - F_theta)^(phi/theta).
struct DeviantLaw {
    double phi = 1.0;
    double theta = 1.0;
    double cdf(double x) const;
};

// g(u) = -(1-u) log(1-u): the complete-graph kernel weighting r(u) in the
// equilibrium rate.
double g_kernel(double u);

// Limit net payoff per unit time to an agent calling at rate phi when
// everyone else calls at rate theta:
//   -phi + integral r(u) (1 - (1-u)^(phi/theta)) du.
double payoff_cg(const RewardSpec& spec, double phi, double theta);

// Limit equilibrium rate: integral of r(u) g(u) du. Evaluates the
// stationarity condition through an independent second route (integration
// against R) and requires agreement within 1e-8.
double nash_cg(const RewardSpec& spec);

// Derivative of payoff_cg in phi (used for best-response sign checks).
double payoff_cg_dphi(const RewardSpec& spec, double phi, double theta);

// Finite-number-of-rewards game: the first k recipients each get n/k.
struct FiniteKNash {
    double theta;
    double payoff;  // symmetric equilibrium payoff, = 1 - theta
};
FiniteKNash nash_finite_k(std::int64_t n, std::int64_t k);

// P(ego is second to receive an item) = phi / (phi + (n-2) theta).
double prob_second(std::int64_t n, double phi, double theta);

// Symmetric-exchange variant: equilibrium rate is half the asymmetric one.
double nash_symmetric(double theta_asy);

// Audience-size rewards (reward c each time another agent learns from you):
// equilibrium rate c * integral of -(1-y)/y log(1-y) dy = c (pi^2/6 - 1).
double nash_audience(double c);

// Fixed point of the regular-interval calling model. The solution is
// determined up to time shift; it is centered so that F(0) = 1/2.
struct TimeGrid {
    double t_min;
    double t_max;
    double h;
};

struct RegularCallsSolution {
    double theta = 1.0;
    double t_min = 0.0;
    double h = 0.0;
    std::vector<double> F;
    double residual = 0.0;
    int iterations = 0;

    double cdf(double t) const;
    double quantile(double q) const;
};

RegularCallsSolution regular_calls_fixed_point(double theta,
                                               TimeGrid grid = {-10.0, 6.0,
                                                                1.0 / 64.0});

}  // namespace gossipfpp::analytic
