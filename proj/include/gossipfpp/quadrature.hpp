#pragma once

#include <functional>

namespace gossipfpp::quad {

// Tanh-sinh quadrature on (a, b). The abscissae never touch the endpoints,
// so integrable endpoint singularities (log(1-u) and friends) are handled
// without special-casing. tol is an absolute tolerance.
double tanh_sinh(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12);

// Adaptive Simpson on [a, b] for smooth integrands.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-10);

}  // namespace gossipfpp::quad
