#pragma once

#include <vector>

namespace gossipfpp::fquad {

// Limit spread law of short-long FPP: the distribution function F solving
//   1 - F(t) = exp(-lambda * integral_{-inf}^t (t-s)^2 F(s) ds),
// unique up to centering; we center so that F(0) = 1/2. The left tail decays
// like exp((2 lambda)^{1/3} t); below the grid the solver continues the tail
// analytically.
struct FquadGrid {
    double t_min;
    double t_max;
    double h;
};

struct FquadSolution {
    double lambda = 1.0;
    double t_min = 0.0;
    double h = 0.0;
    std::vector<double> F;
    std::vector<double> cum;  // integral of F from -inf to each grid point
    double tail_rate = 0.0;   // (2 lambda)^{1/3}
    double residual = 0.0;
    int iterations = 0;
    int projections_at_convergence = 0;  // monotone-envelope projections, 0 when clean

    double t_at(std::size_t j) const { return t_min + h * static_cast<double>(j); }
    double cdf(double t) const;
    double quantile(double q) const;
    double density(double t) const;       // centered finite difference
    double integral_to(double t) const;   // integral of F over (-inf, t]
};

// Damped fixed-point solve. The default grid is [-12, 6] with h = 2^-8 at
// lambda = 1, scaled by lambda^{-1/3} otherwise. Throws std::runtime_error on
// non-convergence (with the residual) and std::invalid_argument when the grid
// does not span the distribution to 1e-4 on both sides.
FquadSolution solve_fquad(double lambda);
FquadSolution solve_fquad(double lambda, FquadGrid grid);

// Spread law of the rank game on the short-long torus:
// t -> F1(A^{1/3} theta_far^{1/3} theta_near^{2/3} t) for the lambda = 1
// solution F1 and nearest-neighbor limit-shape area A.
class ScaledSpreadLaw {
public:
    ScaledSpreadLaw(FquadSolution f1, double theta_near, double theta_far,
                    double area);
    double scale() const { return kappa_; }
    double cdf(double t) const { return f1_.cdf(kappa_ * t); }
    double quantile(double q) const { return f1_.quantile(q) / kappa_; }
    double window(double lo = 0.1, double hi = 0.9) const;
    const FquadSolution& base() const { return f1_; }

private:
    FquadSolution f1_;
    double kappa_;
};

ScaledSpreadLaw fpp_limit_cdf(const FquadSolution& f1, double theta_near,
                              double theta_far, double area);

}  // namespace gossipfpp::fquad
