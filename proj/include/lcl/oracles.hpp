#pragma once

#include "lcl/density.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lcl::oracles {

/// One numerical witness of an integral inequality: lhs against its budget.
struct Report {
    std::string name;
    nlohmann::json parameters = nlohmann::json::object();
    double lhs = 0.0;
    double budget = 0.0;
    double ratio = 0.0;  ///< lhs / budget
    double stderr_ = 0.0;  ///< Monte Carlo standard error of lhs, 0 for quadrature
    std::uint64_t seed = 0;
    bool holds = true;

    nlohmann::json to_json() const;
};

/// 4 pi / (3 + alpha) = int_{|u| <= 1} |u|^alpha du.
double ball_constant(double alpha);

/// sup_v int |v - v*|^alpha g(v*) dv* <= 1 + C_alpha ||g||_inf, evaluated at one v.
Report moment_bound(const BoundedDensity& g, double alpha, const Velocity& v);

/// int_{|v - v*| <= eps} |w - v*|^alpha g(v*) dv* <= C_alpha ||g||_inf eps^(3 + alpha).
Report near_singularity_bound(const BoundedDensity& g, double alpha, double eps, const Velocity& v,
                              const Velocity& w);

/// int_{|v - v*| >= eps} |v - v*|^-3 g(v*) dv* <= 1 + 4 pi ||g||_inf log(1/eps).
Report log_tail_bound(const BoundedDensity& g, double eps, const Velocity& v);

/// int int |v - v*|^alpha g(v) g(v*) <= 1 + C_alpha ||g||_inf by Monte Carlo over
/// independent pairs. Holds when lhs - 3 stderr <= budget.
Report double_moment_bound(const BoundedDensity& g, double alpha, std::size_t pairs, std::uint64_t seed);

struct ScalingFit {
    std::vector<double> eps;
    std::vector<double> lhs;
    double slope = 0.0;
    double r2 = 0.0;
};

/// log-log slope of the near-singularity integral (w = v) over eps = 2^-1 .. 2^-levels.
ScalingFit near_singularity_scaling(const BoundedDensity& g, double alpha, const Velocity& v, int levels = 6);

/// Fit of the tail integral against log(1/eps) over eps = 2^-1 .. 2^-levels.
ScalingFit log_tail_growth(const BoundedDensity& g, const Velocity& v, int levels = 8);

/// Both sides of the coupled kernel inequalities at one pair (v, vt):
///   int |sigma(v - v*) - sigma(vt - v*)|^2 g  vs  (1 + ||g||_inf) psi(|v - vt|^2)
///   int |b(v - v*) - b(vt - v*)| g            vs  (1 + ||g||_inf) psi(|v - vt|)
struct CoupledKernelReport {
    double separation = 0.0;
    double lhs_sigma = 0.0;
    double lhs_b = 0.0;
    double ratio_sigma = 0.0;
    double ratio_b = 0.0;
    int level = 0;
};

/// Deterministic product quadrature. The two singular points are split by a
/// partition of unity; each half is integrated in spherical coordinates around
/// its own singularity (log-radial Gauss-Legendre panels, Gauss-Legendre in
/// the polar cosine, trapezoid in azimuth). `level` doubles the node count in
/// every direction.
CoupledKernelReport coupled_kernel_bound(const BoundedDensity& g, const Velocity& v, const Velocity& vt,
                                         int level = 0);

struct CoupledKernelSweep {
    std::vector<CoupledKernelReport> coarse;
    std::vector<CoupledKernelReport> fine;
    double max_ratio_sigma = 0.0;
    double max_ratio_b = 0.0;
    double max_refinement_change = 0.0;  ///< largest relative change of a ratio from coarse to fine
};

/// Separations along `direction` from `base`; evaluated at `level` and `level + 1`.
CoupledKernelSweep coupled_kernel_sweep(const BoundedDensity& g, const Velocity& base, const Velocity& direction,
                                        const std::vector<double>& separations, int level = 0);

/// An empirical coupling: sample pairs (first[i], second[i]).
struct Coupling {
    std::vector<Velocity> first;
    std::vector<Velocity> second;
};

class MarginalMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean and second moment of a sample against a density, to 3 standard errors.
/// Throws MarginalMismatch.
void check_marginal(const std::vector<Velocity>& samples, const BoundedDensity& g, const char* which);

struct CoupledDriftReport {
    double lhs = 0.0;
    double stderr_ = 0.0;
    double q_cost = 0.0;  ///< int |v - vt|^2 Q
    double r_cost = 0.0;  ///< int |v* - vt*|^2 R
    double budget = 0.0;  ///< (1 + ||g + gt||_inf) (psi(q_cost) + psi(r_cost)), ||g + gt|| <= ||g|| + ||gt||
    double ratio = 0.0;
    std::size_t pairs = 0;
};

/// Monte Carlo estimate of int int |v - vt| |b(v - v*) - b(vt - vt*)| Q(dv, dvt) R(dv*, dvt*)
/// over `pairs` random index pairs. Marginals are validated first.
CoupledDriftReport coupled_drift_bound(const BoundedDensity& g, const BoundedDensity& gt, const Coupling& q,
                                       const Coupling& r, std::size_t pairs, std::uint64_t seed);

/// Couplings of g with g + shift.
Coupling translation_coupling(const BoundedDensity& g, const Velocity& shift, std::size_t n, std::uint64_t seed);
/// v -> 2 mean(g) + shift - v; requires g symmetric about its mean.
Coupling reflection_coupling(const BoundedDensity& g, const Velocity& shift, std::size_t n, std::uint64_t seed);
Coupling diagonal_coupling(const BoundedDensity& g, std::size_t n, std::uint64_t seed);

}  // namespace lcl::oracles
