#include "lcl/kernels.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <limits>

using namespace lcl;
using lcl::test::random_in_shell;
using lcl::test::rel;

namespace {

// Reference formulas written out component by component.
Mat3 a_ref(const Vec3& z) {
    const double r = z.norm();
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = ((i == j ? r * r : 0.0) - z(i) * z(j)) / (r * r * r);
    return m;
}

// Row divergence of a by central differences.
Vec3 divergence_of_a(const Vec3& z) {
    Vec3 out = Vec3::Zero();
    const double h = 1e-5 * z.norm();
    for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e(j) = h;
        const Mat3 d = (a_matrix(z + e) - a_matrix(z - e)) / (2.0 * h);
        out += d.col(j);
    }
    return out;
}

}  // namespace

TEST_CASE("a matches the written-out formula") {
    std::mt19937_64 g(11);
    for (int k = 0; k < 200; ++k) {
        const Vec3 z = random_in_shell(g, 1e-2, 1e2);
        CHECK((a_matrix(z) - a_ref(z)).norm() <= 1e-14 * a_ref(z).norm());
    }
}

TEST_CASE("b is the row divergence of a") {
    std::mt19937_64 g(12);
    for (int k = 0; k < 50; ++k) {
        const Vec3 z = random_in_shell(g, 0.1, 10.0);
        const Vec3 b = b_drift(z);
        CHECK((divergence_of_a(z) - b).norm() <= 1e-7 * b.norm());
    }
}

TEST_CASE("sigma is a square root of a with z in its left kernel") {
    std::mt19937_64 g(13);
    for (int k = 0; k < 200; ++k) {
        const Vec3 z = random_in_shell(g, 1e-3, 1e3);
        const Mat3 s = sigma_matrix(z);
        const Mat3 a = a_matrix(z);
        CHECK((s * s.transpose() - a).norm() <= 1e-13 * a.norm());
        CHECK((s.transpose() * z).norm() <= 1e-13 * s.norm() * z.norm());
        CHECK((a * z).norm() <= 1e-13 * a.norm() * z.norm());
    }
}

TEST_CASE("spectrum, trace and oddness") {
    std::mt19937_64 g(14);
    for (int k = 0; k < 100; ++k) {
        const Vec3 z = random_in_shell(g, 1e-3, 1e3);
        const double inv = 1.0 / z.norm();
        const Mat3 a = a_matrix(z);
        Eigen::SelfAdjointEigenSolver<Mat3> es(a);
        const Vec3 ev = es.eigenvalues();  // ascending
        CHECK(std::abs(ev(0)) <= 1e-13 * inv);
        CHECK(rel(ev(1), inv) <= 1e-12);
        CHECK(rel(ev(2), inv) <= 1e-12);
        CHECK(rel(a.trace(), 2.0 * inv) <= 1e-14);
        CHECK((b_drift(-z) + b_drift(z)).norm() == 0.0);
        CHECK((sigma_matrix(-z) + sigma_matrix(z)).norm() == 0.0);
        CHECK((a_matrix(-z) - a).norm() == 0.0);
    }
}

TEST_CASE("homogeneity under scaling") {
    const Vec3 z(0.3, -1.2, 0.7);
    for (double lambda : {1e-3, 0.5, 7.0, 1e4}) {
        CHECK((a_matrix(lambda * z) - a_matrix(z) / lambda).norm() <= 1e-14 * a_matrix(z).norm() / lambda);
        CHECK((b_drift(lambda * z) - b_drift(z) / (lambda * lambda)).norm() <=
              1e-14 * b_drift(z).norm() / (lambda * lambda));
        const double s = std::pow(lambda, -0.5);
        CHECK((sigma_matrix(lambda * z) - s * sigma_matrix(z)).norm() <= 1e-14 * s * sigma_matrix(z).norm());
    }
}

TEST_CASE("singular and non-finite inputs") {
    CHECK_THROWS_AS(a_matrix(Vec3::Zero()), SingularInput);
    CHECK_THROWS_AS(b_drift(Vec3::Zero()), SingularInput);
    CHECK_THROWS_AS(sigma_matrix(Vec3::Zero()), SingularInput);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(a_matrix(Vec3(nan, 0, 0)), DomainError);
    CHECK_THROWS_AS(mollified_triple(Vec3(1, 0, 0), -0.1), DomainError);
    CHECK_THROWS_AS(mollified_triple(Vec3::Zero(), 0.0), SingularInput);
}

TEST_CASE("mollified kernels") {
    SUBCASE("eps = 0 gives the exact kernels") {
        const Vec3 z(0.4, 0.1, -2.0);
        const auto k = mollified_triple(z, 0.0);
        CHECK(k.a == a_matrix(z));
        CHECK(k.b == b_drift(z));
        CHECK(k.sigma == sigma_matrix(z));
    }
    SUBCASE("vanish at z = 0") {
        const auto k = mollified_triple(Vec3::Zero(), 0.1);
        CHECK(k.a.norm() == 0.0);
        CHECK(k.b.norm() == 0.0);
        CHECK(k.sigma.norm() == 0.0);
    }
    SUBCASE("structure is kept for every eps") {
        std::mt19937_64 g(15);
        for (double eps : {1e-3, 0.1, 1.0}) {
            for (int k = 0; k < 50; ++k) {
                const Vec3 z = random_in_shell(g, 1e-3, 10.0);
                const auto t = mollified_triple(z, eps);
                CHECK((t.sigma * t.sigma.transpose() - t.a).norm() <= 1e-13 * t.a.norm());
                CHECK((t.a * z).norm() <= 1e-13 * t.a.norm() * z.norm());
                // trace a_eps = -b_eps . z, the identity behind energy conservation
                CHECK(std::abs(t.a.trace() + t.b.dot(z)) <= 1e-14 * t.a.trace());
                const double rho = std::sqrt(z.squaredNorm() + eps * eps);
                CHECK(rel(t.b.norm(), 2.0 * z.norm() / (rho * rho * rho)) <= 1e-14);
            }
        }
    }
}

TEST_CASE("Lipschitz check on hand-picked pairs") {
    SUBCASE("equal arguments give zero differences") {
        const auto r = lipschitz_check(Vec3(1, 2, 3), Vec3(1, 2, 3));
        CHECK(r.sigma_diff_sq == 0.0);
        CHECK(r.b_diff == 0.0);
        CHECK(r.branch_bounds_hold());
    }
    SUBCASE("antipodal unit vectors") {
        // sigma(-z) = -sigma(z): |sigma(z) - sigma(-z)|_F^2 = 4 |sigma(z)|_F^2 = 4 tr a = 8.
        const auto r = lipschitz_check(Vec3(1, 0, 0), Vec3(-1, 0, 0));
        CHECK(r.sigma_diff_sq == doctest::Approx(8.0).epsilon(1e-14));
        CHECK(r.b_diff == doctest::Approx(4.0).epsilon(1e-14));
        // min{4 * 2, 2} = 2 and min{2 * 2, 2} = 2
        CHECK(r.sigma_min_form == doctest::Approx(2.0));
        CHECK(r.b_min_form == doctest::Approx(2.0));
        CHECK(r.sigma_ratio == doctest::Approx(4.0));
        CHECK(r.b_ratio == doctest::Approx(2.0));
    }
    SUBCASE("near branch") {
        const Vec3 z(0.0, 0.0, 1.0);
        const auto r = lipschitz_check(z, z + Vec3(1e-6, 0, 0));
        CHECK(r.sigma_ratio < 25.0);
        CHECK(r.b_ratio < 16.0);
        CHECK(r.branch_bounds_hold());
    }
}

TEST_CASE("Lipschitz sweep constants") {
    const auto s = lipschitz_sweep(20000, 1e-3, 1e3, 3);
    CHECK(s.pairs == 20000);
    CHECK(s.max_sigma_ratio <= 25.0);
    CHECK(s.max_b_ratio <= 16.0);
    CHECK(s.branch_violations == 0);
    const auto again = lipschitz_sweep(20000, 1e-3, 1e3, 3);
    CHECK(again.max_sigma_ratio == s.max_sigma_ratio);
}

TEST_CASE("identity sweep") {
    const auto s = identity_sweep(20000, 1e-3, 1e3, 5);
    CHECK(s.samples == 20000);
    CHECK(s.max_error() < 1e-10);
    CHECK(s.symmetry == 0.0);
}
