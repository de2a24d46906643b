#include "lcl/transport.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace lcl;
using lcl::test::random_vec;

namespace {

std::vector<Velocity> cloud(std::mt19937_64& g, std::size_t n) {
    std::vector<Velocity> v(n);
    for (auto& x : v) x = random_vec(g);
    return v;
}

// Minimum over all n! permutations, with the same summation order as plan_cost.
std::pair<double, std::vector<std::size_t>> brute_force(const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
    std::vector<std::size_t> p(x.size());
    std::iota(p.begin(), p.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> arg;
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) c += (x[i] - y[p[i]]).squaredNorm();
        c /= static_cast<double>(p.size());
        if (c < best) {
            best = c;
            arg = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return {best, arg};
}

}  // namespace

TEST_CASE("exact solver equals brute force for small N") {
    std::mt19937_64 g(31);
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t n = 1 + instance % 6;
        const EmpiricalMeasure x(cloud(g, n)), y(cloud(g, n));
        const auto [best, arg] = brute_force(x, y);
        const auto r = w2_exact(x, y);
        CHECK(r.plan.pairing == arg);
        CHECK(r.plan.cost == best);
        CHECK(r.distance == std::sqrt(best));
    }
}

TEST_CASE("two-point example") {
    const EmpiricalMeasure x({Velocity(0, 0, 0), Velocity(2, 0, 0)});
    const EmpiricalMeasure y({Velocity(1, 0, 0), Velocity(3, 0, 0)});
    const auto r = w2_exact(x, y);
    CHECK(r.distance == 1.0);
    CHECK(r.plan.pairing == std::vector<std::size_t>{0, 1});
}

TEST_CASE("metric axioms") {
    std::mt19937_64 g(32);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 2 + k % 7;
        const EmpiricalMeasure x(cloud(g, n)), y(cloud(g, n)), z(cloud(g, n));
        const double xy = w2_exact(x, y).distance;
        CHECK(w2_exact(x, x).distance == 0.0);
        CHECK(xy > 0.0);
        CHECK(w2_exact(y, x).distance == doctest::Approx(xy).epsilon(1e-12));
        CHECK(xy <= w2_exact(x, z).distance + w2_exact(z, y).distance + 1e-12);
    }
}

TEST_CASE("translation moves W2 by the shift length") {
    std::mt19937_64 g(33);
    const EmpiricalMeasure x(cloud(g, 40));
    const Velocity c(0.3, -0.4, 1.2);
    const auto r = w2_exact(x, x.translated(c));
    CHECK(r.distance == doctest::Approx(c.norm()).epsilon(1e-12));
    std::vector<std::size_t> id(40);
    std::iota(id.begin(), id.end(), 0);
    CHECK(r.plan.pairing == id);
}

TEST_CASE("permutation invariance") {
    std::mt19937_64 g(34);
    auto px = cloud(g, 12);
    const EmpiricalMeasure y(cloud(g, 12));
    const double d = w2_exact(EmpiricalMeasure(px), y).distance;
    std::shuffle(px.begin(), px.end(), g);
    CHECK(w2_exact(EmpiricalMeasure(px), y).distance == doctest::Approx(d).epsilon(1e-13));
}

TEST_CASE("plan cost validation") {
    const EmpiricalMeasure x({Velocity(0, 0, 0), Velocity(1, 0, 0)});
    CHECK(plan_cost(x, x, {1, 0}) == 1.0);
    CHECK_THROWS_AS(plan_cost(x, x, {0, 0}), DomainError);
    CHECK_THROWS_AS(plan_cost(x, x, {0}), DomainError);
    CHECK_THROWS_AS(EmpiricalMeasure(std::vector<Velocity>{}), DomainError);
    CHECK_THROWS_AS(w2_exact(x, EmpiricalMeasure({Velocity(0, 0, 0)})), DomainError);
}

TEST_CASE("entropic cost bounds the exact cost from above") {
    std::mt19937_64 g(35);
    const EmpiricalMeasure x(cloud(g, 30)), y(cloud(g, 30));
    const double exact = w2_exact(x, y).plan.cost;
    const auto e = w2_entropic(x, y, 1e-3, 20000);
    REQUIRE(e.converged);
    double max_cost = 0.0;
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 30; ++j) max_cost = std::max(max_cost, (x[i] - y[j]).squaredNorm());
    // The plan is feasible only up to its marginal error.
    CHECK(e.cost >= exact - e.marginal_error * max_cost);
    CHECK(e.cost <= exact * 1.05);
    const auto same = w2_entropic(x, x, 1e-2, 20000);
    CHECK(same.distance > 0.0);
}
