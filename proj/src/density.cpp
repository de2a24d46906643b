#include "lcl/density.hpp"

#include "lcl/quadrature.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lcl {

namespace {

constexpr double kPi = std::numbers::pi;

// Radius beyond which an untruncated Gaussian is treated as zero (e^-72 relative).
constexpr double kGaussianReach = 12.0;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Mass of N(0, s^2 I_3) inside radius R.
double gaussian_ball_mass(double s2, double R) {
    if (!std::isfinite(R)) return 1.0;
    return boost::math::gamma_p(1.5, R * R / (2.0 * s2));
}

void validate(const DensityComponent& c) {
    std::visit(overloaded{
                   [](const UniformBall& b) {
                       require_finite(b.center, "UniformBall");
                       if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
                           throw DomainError("UniformBall: radius must be positive and finite");
                       }
                   },
                   [](const TruncatedGaussian& g) {
                       require_finite(g.mean, "TruncatedGaussian");
                       if (!(g.variance > 0.0) || !std::isfinite(g.variance)) {
                           throw DomainError("TruncatedGaussian: variance must be positive and finite");
                       }
                       if (!(g.truncation > 0.0)) {
                           throw DomainError("TruncatedGaussian: truncation radius must be positive");
                       }
                   }},
               c);
}

}  // namespace

double component_peak(const DensityComponent& c) {
    return std::visit(overloaded{
                          [](const UniformBall& b) { return 3.0 / (4.0 * kPi * b.radius * b.radius * b.radius); },
                          [](const TruncatedGaussian& g) {
                              return std::pow(2.0 * kPi * g.variance, -1.5) / gaussian_ball_mass(g.variance, g.truncation);
                          }},
                      c);
}

Velocity component_center(const DensityComponent& c) {
    return std::visit(overloaded{[](const UniformBall& b) { return b.center; },
                                 [](const TruncatedGaussian& g) { return g.mean; }},
                      c);
}

double component_support(const DensityComponent& c) {
    return std::visit(overloaded{[](const UniformBall& b) { return b.radius; },
                                 [](const TruncatedGaussian& g) { return g.truncation; }},
                      c);
}

double component_density(const DensityComponent& c, const Velocity& v) {
    return std::visit(overloaded{
                          [&](const UniformBall& b) {
                              return (v - b.center).squaredNorm() <= b.radius * b.radius ? component_peak(c) : 0.0;
                          },
                          [&](const TruncatedGaussian& g) {
                              const double d2 = (v - g.mean).squaredNorm();
                              if (std::isfinite(g.truncation) && d2 > g.truncation * g.truncation) return 0.0;
                              return component_peak(c) * std::exp(-d2 / (2.0 * g.variance));
                          }},
                      c);
}

double shell_integral(const DensityComponent& c, const Velocity& p, double r) {
    if (!(r > 0.0)) return 0.0;
    const double d = (p - component_center(c)).norm();
    const double area = 4.0 * kPi * r * r;
    return std::visit(
        overloaded{
            [&](const UniformBall& b) {
                const double kappa = component_peak(c);
                const double R = b.radius;
                if (d == 0.0) return r <= R ? kappa * area : 0.0;
                // Points p + u with cos(angle(u, p - center)) <= mu_star lie in the ball.
                const double mu_star = (R * R - d * d - r * r) / (2.0 * d * r);
                const double frac = std::clamp(0.5 * (mu_star + 1.0), 0.0, 1.0);
                return kappa * area * frac;
            },
            [&](const TruncatedGaussian& g) {
                const double z = component_peak(c);
                const double s2 = g.variance;
                if (d == 0.0) {
                    if (r > g.truncation) return 0.0;
                    return z * area * std::exp(-r * r / (2.0 * s2));
                }
                double mu_hi = 1.0;
                if (std::isfinite(g.truncation)) {
                    const double mu_star = (g.truncation * g.truncation - d * d - r * r) / (2.0 * d * r);
                    if (mu_star < -1.0) return 0.0;
                    mu_hi = std::min(mu_star, 1.0);
                }
                // |p + u - mean|^2 = d^2 + r^2 + 2 d r mu; integrate exp(-k mu) over [-1, mu_hi].
                const double k = d * r / s2;
                const double x = k * (1.0 + mu_hi);
                const double factor = x < 1e-12 ? (1.0 + mu_hi) : -std::expm1(-x) / k;
                return z * 2.0 * kPi * r * r * std::exp(-(d - r) * (d - r) / (2.0 * s2)) * factor;
            }},
        c);
}

std::vector<double> shell_breakpoints(const DensityComponent& c, const Velocity& p) {
    const double d = (p - component_center(c)).norm();
    std::vector<double> out;
    std::visit(overloaded{[&](const UniformBall& b) {
                              out.push_back(std::abs(b.radius - d));
                              out.push_back(b.radius + d);
                          },
                          [&](const TruncatedGaussian& g) {
                              const double s = std::sqrt(g.variance);
                              out.push_back(d);
                              if (std::isfinite(g.truncation)) {
                                  out.push_back(std::abs(g.truncation - d));
                                  out.push_back(g.truncation + d);
                              } else {
                                  out.push_back(d + kGaussianReach * s);
                              }
                          }},
               c);
    std::sort(out.begin(), out.end());
    return out;
}

BoundedDensity::BoundedDensity(DensityComponent single) : parts_{{1.0, std::move(single)}} { finish(); }

BoundedDensity::BoundedDensity(std::vector<Weighted> mixture) : parts_(std::move(mixture)) { finish(); }

BoundedDensity BoundedDensity::uniform_ball(Velocity center, double radius) {
    return BoundedDensity(UniformBall{center, radius});
}

BoundedDensity BoundedDensity::gaussian(Velocity mean, double variance, double truncation) {
    return BoundedDensity(TruncatedGaussian{mean, variance, truncation});
}

void BoundedDensity::finish() {
    if (parts_.empty()) throw DomainError("BoundedDensity: empty mixture");
    double total = 0.0;
    for (const auto& p : parts_) {
        if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
            throw DomainError("BoundedDensity: mixture weights must be positive");
        }
        validate(p.component);
        total += p.weight;
    }
    for (auto& p : parts_) p.weight /= total;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        for (std::size_t j = i + 1; j < parts_.size(); ++j) {
            const double gap = (component_center(parts_[i].component) - component_center(parts_[j].component)).norm();
            if (gap < component_support(parts_[i].component) + component_support(parts_[j].component)) {
                throw DomainError("BoundedDensity: mixture components must have disjoint supports");
            }
        }
    }
    linf_ = 0.0;
    for (const auto& p : parts_) linf_ = std::max(linf_, p.weight * component_peak(p.component));
}

BoundedDensity BoundedDensity::shifted(const Velocity& shift) const {
    std::vector<Weighted> moved = parts_;
    for (auto& p : moved) {
        std::visit(overloaded{[&](UniformBall& b) { b.center += shift; },
                              [&](TruncatedGaussian& g) { g.mean += shift; }},
                   p.component);
    }
    return BoundedDensity(std::move(moved));
}

double BoundedDensity::operator()(const Velocity& v) const {
    double sum = 0.0;
    for (const auto& p : parts_) sum += p.weight * component_density(p.component, v);
    return sum;
}

Velocity BoundedDensity::mean() const {
    Velocity m = Velocity::Zero();
    for (const auto& p : parts_) m += p.weight * component_center(p.component);
    return m;
}

double BoundedDensity::second_moment() const {
    double m2 = 0.0;
    for (const auto& p : parts_) {
        const Velocity c = component_center(p.component);
        const double spread = std::visit(
            overloaded{[](const UniformBall& b) { return 0.6 * b.radius * b.radius; },
                       [](const TruncatedGaussian& g) {
                           if (!std::isfinite(g.truncation)) return 3.0 * g.variance;
                           // E[chi2_3 ; chi2_3 <= c] = 3 P(chi2_5 <= c).
                           const double x = g.truncation * g.truncation / (2.0 * g.variance);
                           return 3.0 * g.variance * boost::math::gamma_p(2.5, x) / boost::math::gamma_p(1.5, x);
                       }},
            p.component);
        m2 += p.weight * (c.squaredNorm() + spread);
    }
    return m2;
}

Velocity BoundedDensity::sample(SplitMix64& g) const {
    std::size_t k = 0;
    if (parts_.size() > 1) {
        const double u = uniform01(g);
        double acc = 0.0;
        for (k = 0; k + 1 < parts_.size(); ++k) {
            acc += parts_[k].weight;
            if (u < acc) break;
        }
    }
    boost::random::normal_distribution<double> normal;
    return std::visit(overloaded{[&](const UniformBall& b) {
                                     Vec3 d;
                                     do {
                                         d = Vec3(normal(g), normal(g), normal(g));
                                     } while (d.squaredNorm() < 1e-300);
                                     return Velocity(b.center + b.radius * std::cbrt(uniform01(g)) * d.normalized());
                                 },
                                 [&](const TruncatedGaussian& tg) {
                                     const double s = std::sqrt(tg.variance);
                                     for (;;) {
                                         const Vec3 x(normal(g), normal(g), normal(g));
                                         if (!std::isfinite(tg.truncation) || s * x.norm() <= tg.truncation) {
                                             return Velocity(tg.mean + s * x);
                                         }
                                     }
                                 }},
                      parts_[k].component);
}

std::vector<Velocity> BoundedDensity::sample(std::size_t n, std::uint64_t seed) const {
    SplitMix64 g(stream_key({seed, 0x5a5a}));
    std::vector<Velocity> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample(g));
    return out;
}

double BoundedDensity::quadrature_mass() const {
    double mass = 0.0;
    for (const auto& p : parts_) {
        const Velocity c = component_center(p.component);
        auto bp = shell_breakpoints(p.component, c);
        const double hi = bp.back();
        mass += p.weight * radial_integral([&](double r) { return shell_integral(p.component, c, r); }, 0.0, 0.0, hi, bp);
    }
    return mass;
}

}  // namespace lcl
