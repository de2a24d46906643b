#pragma once

#include "lcl/kernels.hpp"
#include "lcl/rng.hpp"

#include <limits>
#include <variant>
#include <vector>

namespace lcl {

/// Uniform density on a ball.
struct UniformBall {
    Velocity center = Velocity::Zero();
    double radius = 1.0;
};

/// Isotropic Gaussian N(mean, variance I) restricted to |v - mean| <= truncation
/// and renormalized. truncation = +inf gives the plain Gaussian.
struct TruncatedGaussian {
    Velocity mean = Velocity::Zero();
    double variance = 1.0;
    double truncation = std::numeric_limits<double>::infinity();
};

using DensityComponent = std::variant<UniformBall, TruncatedGaussian>;

/// A probability density in P_2 with a known sup-norm: one component, or a
/// mixture of components with pairwise disjoint supports (so that ||g||_inf is
/// the largest weighted component peak).
class BoundedDensity {
public:
    struct Weighted {
        double weight;
        DensityComponent component;
    };

    explicit BoundedDensity(DensityComponent single);
    /// Weights are normalized. Throws DomainError on overlapping supports or bad parameters.
    explicit BoundedDensity(std::vector<Weighted> mixture);

    static BoundedDensity uniform_ball(Velocity center, double radius);
    static BoundedDensity gaussian(Velocity mean, double variance,
                                   double truncation = std::numeric_limits<double>::infinity());

    double operator()(const Velocity& v) const;
    double linf() const { return linf_; }
    Velocity mean() const;
    /// int |v|^2 g(v) dv
    double second_moment() const;
    /// Mean of |v - mean|^2, summed over coordinates.
    double total_variance() const { return second_moment() - mean().squaredNorm(); }

    const std::vector<Weighted>& components() const { return parts_; }

    /// The law of V + shift for V ~ g.
    BoundedDensity shifted(const Velocity& shift) const;

    Velocity sample(SplitMix64& g) const;
    std::vector<Velocity> sample(std::size_t n, std::uint64_t seed) const;

    /// Total mass by radial quadrature, per component around its center.
    double quadrature_mass() const;

private:
    void finish();

    std::vector<Weighted> parts_;
    double linf_ = 0.0;
};

/// Peak value of a component.
double component_peak(const DensityComponent& c);
/// Center of symmetry of a component.
Velocity component_center(const DensityComponent& c);
/// Support radius (may be +inf).
double component_support(const DensityComponent& c);
double component_density(const DensityComponent& c, const Velocity& v);

/// Surface integral of the component density over the sphere of radius r
/// around p: int_{|u| = r} g(p + u) dS(u). Closed form for both families.
double shell_integral(const DensityComponent& c, const Velocity& p, double r);

/// Radii at which shell_integral around p loses smoothness.
std::vector<double> shell_breakpoints(const DensityComponent& c, const Velocity& p);

}  // namespace lcl
