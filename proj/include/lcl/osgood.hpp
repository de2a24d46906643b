#pragma once

#include <span>
#include <vector>

namespace lcl::osgood {

/// Osgood modulus: x (1 - log x) on [0, 1], x beyond. Continuous and increasing.
double psi(double x);

/// Concave majorant of psi: x (1 - log x) on [0, 1/2], x log 2 + 1/2 beyond.
/// psi/2 <= gamma_majorant <= 2 psi.
double gamma_majorant(double x);

/// M(x) = int_x^1 dy / psi(y), closed form: log(1 - log x) on (0, 1], -log x on [1, inf).
/// Strictly decreasing, M(1) = 0, M(0+) = +inf.
double m_transform(double x);

/// Inverse of m_transform on the whole real line.
double m_inverse(double y);

/// Maximum |closed form - quadrature| / max(1, |M|) of m_transform over the
/// given points, quadrature done with adaptive Gauss-Kronrod on 1/psi.
double m_quadrature_discrepancy(std::span<const double> points);

/// Throws if the closed form disagrees with quadrature by more than 1e-8 on a
/// log-spaced grid over [1e-12, 1e6]. Runs once per process.
void validate_closed_forms();

/// Nonnegative step function: value gamma[k] on [times[k], times[k+1]), the last
/// value holds until the horizon.
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(std::vector<double> times, std::vector<double> values, double horizon);

    /// Constant gamma on [0, horizon].
    static StepFunction constant(double value, double horizon);

    /// Left-endpoint Riemann sum of the samples on [0, t].
    double integral(double t) const;
    double operator()(double t) const;
    double horizon() const { return horizon_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
    double horizon_ = 0.0;
};

/// (a, gamma, T) of the integral inequality rho(t) <= a + int_0^t gamma psi(rho).
struct Problem {
    double a = 0.0;
    StepFunction gamma;
};

/// Largest rho(t) compatible with M(a) - M(rho(t)) <= int_0^t gamma; 0 when a = 0.
double envelope(const Problem& problem, double t);

/// Sup-over-[0,T] bounds m_inverse(M(a_n) - gamma_total) for a sequence of initial gaps.
std::vector<double> stability_certificate(std::span<const double> initial_gaps, double gamma_total);

}  // namespace lcl::osgood
