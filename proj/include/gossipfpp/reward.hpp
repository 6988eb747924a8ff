#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gossipfpp {

// Rank-based reward functions R(u), u in (0,1], nonincreasing with R(1) = 0
// for the standard families, together with the Stieltjes measure
// r(u) du = -dR: the threshold family's r is a point mass, so integrals
// against r are evaluated as density part plus atoms, never as a pointwise
// density.
class RewardSpec {
public:
    enum class Family { linear, threshold, constant, table };

    struct Atom {
        double location;
        double mass;
    };

    // R(u) = 2(1-u), Rbar = 1.
    static RewardSpec linear();
    // R(u) = (1/u0) 1{u <= u0}, 0 < u0 < 1, Rbar = 1.
    static RewardSpec threshold(double u0);
    // R == 1 on (0,1]; admitted as a boundary case for testing even though it
    // violates R(1) = 0 (flagged by satisfies_standard_props()).
    static RewardSpec constant();
    // Piecewise-linear through knots (u_i, R_i); u must start at 0, end at 1,
    // strictly increase; R must be nonincreasing (non-monotone tables are
    // rejected).
    static RewardSpec table(std::vector<double> u, std::vector<double> R);

    Family family() const { return family_; }
    const std::string& family_name() const { return name_; }

    // eval_R. Throws std::domain_error for u outside (0,1].
    double operator()(double u) const;

    // Rbar = integral of R over (0,1), exact per family.
    double rbar() const;

    // True when the family satisfies the standard properties (R nonincreasing
    // with R(1) = 0). The constant family reports false.
    bool satisfies_standard_props() const;

    // Stieltjes integral of f against r(u) du over (0,1].
    double integrate_r(const std::function<double(double)>& f) const;

    // Integral of g(u) * R(u) over (0,1), split at discontinuities of R.
    double integrate_R(const std::function<double(double)>& g) const;

    const std::vector<Atom>& atoms() const { return atoms_; }

    // Interior points where R or r is discontinuous (integration split points).
    std::vector<double> breakpoints() const;

    // Parameters, for config round-trips: threshold -> {u0}; table -> knots
    // flattened as u0,R0,u1,R1,...; otherwise empty.
    std::vector<double> params() const;

private:
    RewardSpec() = default;
    Family family_ = Family::linear;
    std::string name_;
    double u0_ = 0.0;                   // threshold location
    std::vector<double> knots_u_, knots_R_;  // table family
    std::vector<Atom> atoms_;
};

// Finite-number-of-rewards variant: the first k recipients of an item each
// receive reward w (w = n/k normalizes the total reward per item to n).
struct FiniteKReward {
    std::int64_t k = 2;
    double w = 1.0;

    FiniteKReward(std::int64_t k_, double w_);
    static FiniteKReward normalized(std::int64_t n, std::int64_t k);
};

}  // namespace gossipfpp
