#include "lcl/particle.hpp"
#include "lcl/transport.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace lcl;

namespace {

SimConfig small(std::size_t n, double horizon = 0.05) {
    SimConfig c;
    c.n = n;
    c.dt = 1e-3;
    c.horizon = horizon;
    c.epsilon = 0.1;
    c.seed = 7;
    c.record_every = 5;
    return c;
}

Ensemble gaussian(std::size_t n, std::uint64_t seed) {
    return init_ensemble(BoundedDensity::gaussian(Velocity::Zero(), 1.0), n, seed);
}

Vec3 momentum(const std::vector<Velocity>& v) {
    Vec3 s = Vec3::Zero();
    for (const auto& x : v) s += x;
    return s;
}

}  // namespace

TEST_CASE("configuration checks") {
    SimConfig c = small(10);
    CHECK_NOTHROW(validate(c));
    c.epsilon = 0.0;
    CHECK_THROWS_AS(validate(c), DomainError);
    c.scheme = Scheme::tamed_euler;
    CHECK_NOTHROW(validate(c));
    c.dt = 0.0;
    CHECK_THROWS_AS(validate(c), DomainError);
    CHECK(small(10, 1.0).steps() == 1000);
}

TEST_CASE("a single particle does not move") {
    Ensemble e = init_ensemble(std::vector<Velocity>{Velocity(0.3, 0.2, 0.1)}, 1, 1);
    const Velocity before = e.velocities[0];
    for (int k = 0; k < 10; ++k) step(e, small(1));
    CHECK(e.velocities[0] == before);
    CHECK(e.step == 10);
}

TEST_CASE("two particles keep their momentum") {
    Ensemble e = init_ensemble(std::vector<Velocity>{Velocity(1, 0, 0), Velocity(-0.5, 0.5, 0)}, 2, 1);
    const Vec3 p0 = momentum(e.velocities);
    for (int k = 0; k < 100; ++k) step(e, small(2));
    CHECK((momentum(e.velocities) - p0).norm() <= 1e-14);
    CHECK(e.velocities[0] != Velocity(1, 0, 0));
}

TEST_CASE("momentum is conserved to rounding") {
    Ensemble e = gaussian(200, 3);
    const Vec3 p0 = momentum(e.velocities);
    for (int k = 0; k < 20; ++k) {
        const Vec3 before = momentum(e.velocities);
        step(e, small(200));
        CHECK((momentum(e.velocities) - before).norm() <= 1e-10 * 200);
    }
    CHECK((momentum(e.velocities) - p0).norm() <= 1e-10 * 200);
}

TEST_CASE("energy changes only at order dt squared per step") {
    // sigma^T z = 0 and tr a = -b.z cancel every O(dt) and O(dt^1/2) term.
    Ensemble e = gaussian(300, 4);
    SimConfig c = small(300);
    double e0 = 0.0, e1 = 0.0;
    for (const auto& v : e.velocities) e0 += v.squaredNorm();
    step(e, c);
    for (const auto& v : e.velocities) e1 += v.squaredNorm();
    // A single unbalanced noise term would move the total by ~ sqrt(dt N) ~ 0.5.
    CHECK(std::abs(e1 - e0) / 300.0 < 1e-2);
}

TEST_CASE("runs are deterministic and thread-independent") {
    const Ensemble init = gaussian(150, 5);
    SimConfig c = small(150);
    Ensemble a = init, b = init, t = init;
    for (int k = 0; k < 5; ++k) {
        step(a, c);
        step(b, c);
    }
    c.threads = 3;
    for (int k = 0; k < 5; ++k) step(t, c);
    CHECK(a.velocities == b.velocities);
    CHECK(a.velocities == t.velocities);
}

TEST_CASE("different seeds give different paths") {
    const Ensemble init = gaussian(20, 6);
    SimConfig c = small(20);
    Ensemble a = init, b = init;
    step(a, c);
    c.seed = 8;
    step(b, c);
    CHECK(a.velocities != b.velocities);
}

TEST_CASE("tamed scheme without mollification") {
    SimConfig c = small(50);
    c.epsilon = 0.0;
    c.scheme = Scheme::tamed_euler;
    Ensemble e = gaussian(50, 9);
    const Vec3 p0 = momentum(e.velocities);
    for (int k = 0; k < 10; ++k) step(e, c);
    CHECK((momentum(e.velocities) - p0).norm() <= 1e-12);
    for (const auto& v : e.velocities) CHECK(v.allFinite());
}

TEST_CASE("coincident particles are skipped without mollification") {
    SimConfig c = small(3);
    c.epsilon = 0.0;
    c.scheme = Scheme::tamed_euler;
    Ensemble e = init_ensemble(std::vector<Velocity>{Velocity(0, 0, 0), Velocity(0, 0, 0), Velocity(1, 0, 0)}, 3, 1);
    const auto stats = step(e, c);
    CHECK(stats.skipped_pairs == 1);
}

TEST_CASE("simulate records the requested rows") {
    SimConfig c = small(100, 0.02);
    c.record_every = 5;
    c.keep_snapshots = true;
    const auto tr = simulate(c, gaussian(100, 10));
    REQUIRE(tr.rows.size() == 5);
    CHECK(tr.rows.front().t == 0.0);
    CHECK(tr.rows.back().t == doctest::Approx(0.02));
    CHECK(tr.snapshots.size() == 5);
    CHECK(tr.final.step == 20);
    for (const auto& r : tr.rows) {
        CHECK(r.mass == 1.0);
        CHECK(r.entropy.has_value());
        CHECK(r.linf.has_value());
        CHECK(!r.rho_hat.has_value());
    }
}

TEST_CASE("coupled run from identical initials stays identical") {
    SimConfig c = small(80, 0.02);
    const Ensemble init = gaussian(80, 11);
    const auto tr = simulate_coupled(c, init, init);
    for (const auto& r : tr.first) CHECK(*r.rho_hat == 0.0);
    CHECK(tr.final.first.velocities == tr.final.second.velocities);
    for (const auto& row : tr.envelope) CHECK(row.envelope == 0.0);
}

TEST_CASE("translated initial gap is reproduced at t = 0") {
    SimConfig c = small(60, 0.01);
    const Ensemble init = gaussian(60, 12);
    Ensemble shifted = init;
    const Vec3 shift(0.1, 0.0, 0.0);
    for (auto& v : shifted.velocities) v += shift;
    const auto tr = simulate_coupled(c, init, shifted);
    CHECK(*tr.first.front().rho_hat == doctest::Approx(shift.squaredNorm()).epsilon(1e-12));
    CHECK(*tr.first.front().w2 == doctest::Approx(shift.norm()).epsilon(1e-12));
    // Translation commutes with the pairwise dynamics, so the gap stays put.
    for (const auto& r : tr.first) CHECK(*r.rho_hat == doctest::Approx(shift.squaredNorm()).epsilon(1e-9));
    for (const auto& row : tr.envelope) CHECK(row.envelope >= row.rho_hat - 1e-15);
}

TEST_CASE("coupling pairs by optimal transport first") {
    SimConfig c = small(30, 0.002);
    const Ensemble a = gaussian(30, 13);
    Ensemble b = a;
    std::reverse(b.velocities.begin(), b.velocities.end());
    const auto tr = simulate_coupled(c, a, b);
    CHECK(*tr.first.front().rho_hat == 0.0);
    CoupleOptions raw;
    raw.pair_initial = false;
    const auto unpaired = simulate_coupled(c, a, b, raw);
    CHECK(*unpaired.first.front().rho_hat > 0.0);
}

TEST_CASE("linear process in drift-only mode falls radially") {
    SimConfig c = small(1, 0.1);
    c.epsilon = 0.0;
    c.scheme = Scheme::tamed_euler;
    c.dt = 1e-5;
    const Ensemble background = init_ensemble(std::vector<Velocity>{Velocity::Zero()}, 1, 1);
    LinearOptions opt;
    opt.drift_only = true;
    opt.record_every = 10000;
    const double r0 = 1.0;
    const auto tr = simulate_linear(background, {Velocity(r0, 0, 0)}, c, opt);
    const double t = tr.times.back();
    // r' = -2 / r^2
    CHECK(tr.positions.back()[0].norm() == doctest::Approx(std::cbrt(r0 * r0 * r0 - 6.0 * t)).epsilon(1e-4));
    CHECK(tr.positions.back()[0].y() == 0.0);
}
