#pragma once

#include <functional>
#include <span>
#include <vector>

namespace lcl {

/// int_{r_lo}^{r_hi} r^alpha f(r) dr for f(r) = O(r^2) at the origin (a shell
/// integral), alpha > -3. Adaptive Gauss-Kronrod on the pieces between the
/// given breakpoints; the piece touching r = 0 is integrated after the
/// substitution r = c u^m, which removes the r^(alpha+2) endpoint singularity.
/// alpha <= -3 is only accepted when r_lo > 0.
double radial_integral(const std::function<double(double)>& shell, double alpha, double r_lo, double r_hi,
                       std::span<const double> breakpoints, double rel_tol = 1e-12);

struct GaussRule {
    std::vector<double> nodes;    ///< on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule.
GaussRule gauss_legendre(int n);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace lcl
