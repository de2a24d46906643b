#pragma once

#include "lcl/kernels.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lcl {

struct MomentReport {
    double mass = 1.0;
    Vec3 momentum = Vec3::Zero();  ///< (1/N) sum v_i
    double energy = 0.0;           ///< (1/N) sum |v_i|^2
    double m2 = 0.0;               ///< second moment, equal to energy
};

/// Throws DomainError for an empty sample.
MomentReport moments(std::span<const Velocity> v);

/// Per-coordinate variances (1/N) sum (v_i - mean)^2, the directional temperatures.
Vec3 directional_variance(std::span<const Velocity> v);

/// Silverman's rule for a d = 3 Gaussian kernel:
/// h = s (4 / (5 N))^(1/7), s^2 the mean per-coordinate sample variance.
double silverman_bandwidth(std::span<const Velocity> v);

/// Leave-one-out Gaussian KDE evaluated at every particle.
struct KdeSummary {
    double bandwidth = 0.0;
    double linf = 0.0;      ///< max_i fhat(v_i)
    double entropy = 0.0;   ///< (1/N) sum_i log fhat(v_i), an estimate of int f log f
    bool degenerate = false;  ///< all points equal; a fallback bandwidth was used
};

/// bandwidth <= 0 selects Silverman's rule. The kernel is cut at 4 bandwidths
/// (relative weight e^-8), with a cell list for the neighbour search. Needs N >= 2.
KdeSummary kde_summary(std::span<const Velocity> v, double bandwidth = 0.0);

/// Max of the KDE over the particles. Smoothing biases it low for peaked
/// densities and at the edge of compact supports.
double linf_estimate(std::span<const Velocity> v, double bandwidth = 0.0);

/// Plug-in estimate of int f log f (smaller means more spread).
double entropy_estimate(std::span<const Velocity> v, double bandwidth = 0.0);

/// A C^2 test function with exact derivatives.
struct TestFunction {
    std::string name;
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> gradient;
    std::function<Mat3(const Vec3&)> hessian;
};

/// Version of the battery returned by standard_battery; bump it on any change.
inline constexpr int kBatteryVersion = 1;

/// 1, v1, v2, v3, |v|^2, two compactly supported bumps, cos and sin of k.v.
std::vector<TestFunction> standard_battery();

/// exp(-1 / (1 - |v - c|^2 / R^2)) inside the ball, 0 outside.
TestFunction bump(std::string name, const Vec3& center, double radius);
TestFunction plane_wave_cos(std::string name, const Vec3& k);
TestFunction plane_wave_sin(std::string name, const Vec3& k);

/// L phi(v, v*) = 1/2 sum a_ij(v - v*) d_ij phi(v) + sum b_i(v - v*) d_i phi(v),
/// with the mollified kernels when epsilon > 0. Throws SingularInput if v = v* and epsilon = 0.
double l_operator(const TestFunction& phi, const Velocity& v, const Velocity& v_star, double epsilon = 0.0);

struct WeakResidual {
    std::string phi;
    double t0 = 0.0;
    double t1 = 0.0;
    double lhs = 0.0;       ///< increment of the empirical average of phi
    double rhs = 0.0;       ///< trapezoid in time of (1/N^2) sum_{i != j} L phi(v_i, v_j)
    double residual = 0.0;  ///< lhs - rhs
    double stderr_ = 0.0;   ///< spread of the per-particle residuals / sqrt(N), floored at 1e-15
};

struct Snapshot {
    double time = 0.0;
    std::vector<Velocity> velocities;
};

/// Residuals of the weak formulation between consecutive snapshots, for each
/// test function. Snapshots must share N and have increasing times; needs at
/// least two.
std::vector<WeakResidual> weak_residual(std::span<const Snapshot> snapshots, std::span<const TestFunction> battery,
                                        double epsilon = 0.0);

}  // namespace lcl
