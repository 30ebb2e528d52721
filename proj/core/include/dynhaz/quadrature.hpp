#pragma once

#include <functional>

namespace dynhaz {

// Gauss-Kronrod 7-15 pair on [a, b]. Returns the K15 value; *err_est (if
// given) receives the |K15 - G7| error estimate. Exact for polynomials of
// degree <= 22, which covers every built-in kernel weight.
double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b,
                        double* err_est = nullptr);

// Adaptive bisection on top of the GK15 rule, absolute tolerance.
double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, int max_depth = 48);

}  // namespace dynhaz
