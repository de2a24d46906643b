#include "lcl/oracles.hpp"
#include "lcl/osgood.hpp"
#include "lcl/quadrature.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace lcl;
using namespace lcl::oracles;

namespace {

const BoundedDensity unit_ball = BoundedDensity::uniform_ball(Velocity::Zero(), 1.0);

// Newtonian potential of the uniform unit ball, normalized to mass 1.
double ball_potential(double r) { return r <= 1.0 ? 1.5 * (1.0 - r * r / 3.0) : 1.0 / r; }

}  // namespace

TEST_CASE("ball constant") {
    CHECK(ball_constant(-1.0) == doctest::Approx(2.0 * M_PI));
    CHECK(ball_constant(0.0) == doctest::Approx(4.0 * M_PI / 3.0));
    CHECK_THROWS(ball_constant(-3.0));
}

TEST_CASE("density basics") {
    CHECK(unit_ball.linf() == doctest::Approx(3.0 / (4.0 * M_PI)));
    CHECK(unit_ball.quadrature_mass() == doctest::Approx(1.0).epsilon(1e-10));
    const auto gauss = BoundedDensity::gaussian(Velocity(1, 0, 0), 2.0);
    CHECK(gauss.linf() == doctest::Approx(std::pow(4.0 * M_PI, -1.5)));
    CHECK(gauss.second_moment() == doctest::Approx(7.0));
    CHECK(gauss.quadrature_mass() == doctest::Approx(1.0).epsilon(1e-10));
    const auto trunc = BoundedDensity::gaussian(Velocity::Zero(), 1.0, 2.0);
    CHECK(trunc.quadrature_mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(trunc(Velocity(2.1, 0, 0)) == 0.0);
    const auto s = gauss.sample(50000, 3);
    Vec3 mean = Vec3::Zero();
    for (const auto& v : s) mean += v / 50000.0;
    CHECK((mean - Vec3(1, 0, 0)).norm() < 0.05);
    CHECK_THROWS_AS(BoundedDensity({{0.5, UniformBall{Velocity::Zero(), 1.0}},
                                    {0.5, UniformBall{Velocity(1, 0, 0), 1.0}}}),
                    DomainError);
}

TEST_CASE("moment bound matches the ball potential") {
    const auto center = moment_bound(unit_ball, -1.0, Velocity::Zero());
    CHECK(std::abs(center.lhs - 1.5) <= 1e-4);
    CHECK(center.holds);
    for (double r : {0.3, 0.9, 1.0, 1.7, 5.0}) {
        const auto rep = moment_bound(unit_ball, -1.0, Velocity(0, r, 0));
        CHECK(rep.lhs == doctest::Approx(ball_potential(r)).epsilon(1e-9));
        CHECK(rep.holds);
    }
    // Standard Gaussian at its mean: int |u|^-1 = sqrt(2 / pi).
    const auto g = BoundedDensity::gaussian(Velocity::Zero(), 1.0);
    CHECK(moment_bound(g, -1.0, Velocity::Zero()).lhs == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-9));
    CHECK(moment_bound(g, -2.0, Velocity(0.5, 0.5, 0)).holds);
}

TEST_CASE("near-singularity and tail integrals of the uniform ball") {
    for (double alpha : {-2.0, -1.0}) {
        for (double eps : {0.5, 0.1, 0.01}) {
            const auto rep = near_singularity_bound(unit_ball, alpha, eps, Velocity::Zero(), Velocity::Zero());
            CHECK(rep.lhs == doctest::Approx(3.0 * std::pow(eps, 3 + alpha) / (3 + alpha)).epsilon(1e-9));
            CHECK(rep.holds);
            // Off-center w: the bound is uniform in w.
            CHECK(near_singularity_bound(unit_ball, alpha, eps, Velocity(0.2, 0, 0), Velocity(0.2, eps / 2, 0)).holds);
        }
    }
    for (double eps : {0.5, 0.1, 0.01}) {
        const auto rep = log_tail_bound(unit_ball, eps, Velocity::Zero());
        CHECK(rep.lhs == doctest::Approx(3.0 * std::log(1.0 / eps)).epsilon(1e-9));
        CHECK(rep.holds);
    }
}

TEST_CASE("scaling and growth fits") {
    const auto g = BoundedDensity::gaussian(Velocity::Zero(), 1.0);
    for (double alpha : {-2.5, -2.0, -1.0, 0.0}) {
        const auto fit = near_singularity_scaling(g, alpha, Velocity(0.1, 0, 0));
        CHECK(std::abs(fit.slope - (3.0 + alpha)) <= 0.1);
    }
    const auto growth = log_tail_growth(g, Velocity::Zero());
    CHECK(growth.r2 > 0.99);
    // Slope 4 pi g(v) as eps -> 0.
    CHECK(growth.slope == doctest::Approx(4 * M_PI * g(Velocity::Zero())).epsilon(0.05));
}

TEST_CASE("double moment by Monte Carlo") {
    // Two independent uniform unit-ball points: E|X - Y|^-1 = 6/5.
    const auto rep = double_moment_bound(unit_ball, -1.0, 200000, 7);
    CHECK(std::abs(rep.lhs - 1.2) <= 4 * rep.stderr_);
    CHECK(rep.holds);
}

TEST_CASE("coupled kernel bound") {
    const auto g = BoundedDensity::gaussian(Velocity::Zero(), 1.0);
    const Velocity v(0.3, 0.1, -0.2);
    const auto same = coupled_kernel_bound(g, v, v);
    CHECK(same.lhs_sigma == 0.0);
    CHECK(same.lhs_b == 0.0);
    const auto sweep = coupled_kernel_sweep(g, v, Velocity(1, 0, 0), {1e-4, 1e-2, 1.0, 10.0});
    REQUIRE(sweep.coarse.size() == 4);
    for (const auto& r : sweep.fine) {
        CHECK(std::isfinite(r.ratio_sigma));
        CHECK(std::isfinite(r.ratio_b));
    }
    CHECK(sweep.max_refinement_change < 0.1);
    // Far apart, int |b(v - .) - b(vt - .)| g -> int |b(v - .)| g = 2 int |v - v*|^-2 g.
    const auto far = coupled_kernel_bound(g, Velocity::Zero(), Velocity(100, 0, 0), 1);
    const double expect = 2.0 * moment_bound(g, -2.0, Velocity::Zero()).lhs + 2.0 / (100.0 * 100.0);
    CHECK(far.lhs_b == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("coupled drift bound") {
    const auto g = BoundedDensity::gaussian(Velocity::Zero(), 1.0);
    const auto q = diagonal_coupling(g, 4000, 1);
    const auto zero = coupled_drift_bound(g, g, q, q, 20000, 2);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.q_cost == 0.0);

    const Vec3 shift(0.1, 0, 0);
    const auto gt = g.shifted(shift);
    const auto qt = translation_coupling(g, shift, 4000, 3);
    const auto rt = reflection_coupling(g, shift, 4000, 4);
    CHECK(qt.second[5] == qt.first[5] + shift);
    CHECK(rt.second[5] == shift - rt.first[5]);
    CHECK(qt.first.size() == 4000);
    const auto a = coupled_drift_bound(g, gt, qt, rt, 50000, 5);
    const auto b = coupled_drift_bound(g, gt, qt, rt, 100000, 5);
    CHECK(a.q_cost == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(a.ratio > 0.0);
    CHECK(a.ratio < 1.0);
    CHECK(std::abs(b.ratio - a.ratio) / a.ratio < 0.1);
    CHECK(a.budget == doctest::Approx((1 + 2 * g.linf()) * (osgood::psi(a.q_cost) + osgood::psi(a.r_cost))));

    // Translating both pairs leaves every difference v - v* unchanged, so the
    // integrand vanishes up to the rounding of the shift; a positive lhs needs
    // R to differ from Q.
    const auto flat = coupled_drift_bound(g, gt, qt, qt, 20000, 7);
    CHECK(flat.lhs <= 1e-12 * a.lhs);

    Coupling wrong = qt;
    for (auto& v : wrong.second) v += Vec3(5, 0, 0);
    CHECK_THROWS_AS(coupled_drift_bound(g, gt, wrong, rt, 1000, 6), MarginalMismatch);
}

TEST_CASE("quadrature helpers") {
    const auto rule = gauss_legendre(5);
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += rule.weights[k] * std::pow(rule.nodes[k], 8);
    CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto fit = least_squares(x, y);
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    CHECK(fit.r2 == doctest::Approx(1.0));
    // int_0^1 r^-1 4 pi r^2 dr = 2 pi
    const double v = radial_integral([](double r) { return 4 * M_PI * r * r; }, -1.0, 0.0, 1.0, {});
    CHECK(v == doctest::Approx(2 * M_PI).epsilon(1e-12));
}
