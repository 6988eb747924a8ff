#include "gossipfpp/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gossipfpp/quadrature.hpp"

namespace gossipfpp {

RewardSpec RewardSpec::linear() {
    RewardSpec s;
    s.family_ = Family::linear;
    s.name_ = "linear";
    return s;
}

RewardSpec RewardSpec::threshold(double u0) {
    if (!(u0 > 0.0 && u0 < 1.0))
        throw std::invalid_argument("threshold reward: need 0 < u0 < 1");
    RewardSpec s;
    s.family_ = Family::threshold;
    s.name_ = "threshold";
    s.u0_ = u0;
    s.atoms_.push_back({u0, 1.0 / u0});
    return s;
}

RewardSpec RewardSpec::constant() {
    RewardSpec s;
    s.family_ = Family::constant;
    s.name_ = "constant";
    return s;
}

RewardSpec RewardSpec::table(std::vector<double> u, std::vector<double> R) {
    if (u.size() != R.size() || u.size() < 2)
        throw std::invalid_argument("table reward: need >= 2 knots");
    if (u.front() != 0.0 || u.back() != 1.0)
        throw std::invalid_argument("table reward: knots must span [0, 1]");
    for (std::size_t i = 1; i < u.size(); ++i) {
        if (!(u[i] > u[i - 1]))
            throw std::invalid_argument("table reward: u must strictly increase");
        if (R[i] > R[i - 1])
            throw std::invalid_argument("table reward: R must be nonincreasing");
    }
    if (R.front() <= 0.0)
        throw std::invalid_argument("table reward: R(0+) must be positive");
    RewardSpec s;
    s.family_ = Family::table;
    s.name_ = "table";
    s.knots_u_ = std::move(u);
    s.knots_R_ = std::move(R);
    return s;
}

double RewardSpec::operator()(double u) const {
    if (!(u > 0.0 && u <= 1.0))
        throw std::domain_error("R(u): u outside (0, 1]");
    switch (family_) {
        case Family::linear:
            return 2.0 * (1.0 - u);
        case Family::threshold:
            return u <= u0_ ? 1.0 / u0_ : 0.0;
        case Family::constant:
            return 1.0;
        case Family::table: {
            auto it = std::upper_bound(knots_u_.begin(), knots_u_.end(), u);
            auto i = static_cast<std::size_t>(it - knots_u_.begin());
            if (i == 0) return knots_R_.front();
            if (i >= knots_u_.size()) return knots_R_.back();
            const double t = (u - knots_u_[i - 1]) / (knots_u_[i] - knots_u_[i - 1]);
            return knots_R_[i - 1] + t * (knots_R_[i] - knots_R_[i - 1]);
        }
    }
    return 0.0;
}

double RewardSpec::rbar() const {
    switch (family_) {
        case Family::linear:
        case Family::threshold:
        case Family::constant:
            return 1.0;
        case Family::table: {
            double sum = 0.0;  // trapezoid is exact for piecewise-linear R
            for (std::size_t i = 0; i + 1 < knots_u_.size(); ++i)
                sum += 0.5 * (knots_R_[i] + knots_R_[i + 1]) *
                       (knots_u_[i + 1] - knots_u_[i]);
            return sum;
        }
    }
    return 0.0;
}

bool RewardSpec::satisfies_standard_props() const {
    switch (family_) {
        case Family::linear:
        case Family::threshold:
            return true;
        case Family::constant:
            return false;
        case Family::table:
            return knots_R_.back() == 0.0 && knots_R_.front() > knots_R_.back();
    }
    return false;
}

double RewardSpec::integrate_r(const std::function<double(double)>& f) const {
    double total = 0.0;
    switch (family_) {
        case Family::linear:
            total += 2.0 * quad::tanh_sinh(f, 0.0, 1.0);
            break;
        case Family::constant:
            break;
        case Family::threshold:
            break;  // pure atom, handled below
        case Family::table:
            for (std::size_t i = 0; i + 1 < knots_u_.size(); ++i) {
                const double density = (knots_R_[i] - knots_R_[i + 1]) /
                                       (knots_u_[i + 1] - knots_u_[i]);
                if (density > 0.0)
                    total += density *
                             quad::tanh_sinh(f, knots_u_[i], knots_u_[i + 1]);
            }
            break;
    }
    for (const auto& atom : atoms_) total += atom.mass * f(atom.location);
    return total;
}

double RewardSpec::integrate_R(const std::function<double(double)>& g) const {
    auto integrand = [&](double u) { return g(u) * (*this)(u); };
    std::vector<double> cuts = breakpoints();
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(1.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i])
            total += quad::tanh_sinh(integrand, cuts[i], cuts[i + 1]);
    return total;
}

std::vector<double> RewardSpec::breakpoints() const {
    switch (family_) {
        case Family::threshold:
            return {u0_};
        case Family::table: {
            std::vector<double> cuts(knots_u_.begin() + 1, knots_u_.end() - 1);
            return cuts;
        }
        default:
            return {};
    }
}

std::vector<double> RewardSpec::params() const {
    switch (family_) {
        case Family::threshold:
            return {u0_};
        case Family::table: {
            std::vector<double> p;
            for (std::size_t i = 0; i < knots_u_.size(); ++i) {
                p.push_back(knots_u_[i]);
                p.push_back(knots_R_[i]);
            }
            return p;
        }
        default:
            return {};
    }
}

FiniteKReward::FiniteKReward(std::int64_t k_, double w_) : k(k_), w(w_) {
    if (k < 2) throw std::invalid_argument("FiniteKReward: need k >= 2");
    if (!(w > 0.0)) throw std::invalid_argument("FiniteKReward: need w > 0");
}

FiniteKReward FiniteKReward::normalized(std::int64_t n, std::int64_t k) {
    if (k >= n) throw std::invalid_argument("FiniteKReward: need k < n");
    return FiniteKReward(k, static_cast<double>(n) / static_cast<double>(k));
}

}  // namespace gossipfpp
