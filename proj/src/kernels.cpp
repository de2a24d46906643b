#include "lcl/kernels.hpp"

#include "lcl/rng.hpp"

#include <Eigen/Eigenvalues>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lcl {

namespace {

double checked_norm(const Velocity& z, const char* op) {
    require_finite(z, op);
    const double r = z.norm();
    if (!(r > 0.0)) {
        throw SingularInput(std::string(op) + ": kernel evaluated at z = 0 (mollify or skip the pair)");
    }
    return r;
}

Mat3 projector_shape(const Velocity& z) {
    return z.squaredNorm() * Mat3::Identity() - z * z.transpose();
}

Vec3 random_direction(SplitMix64& g) {
    boost::random::normal_distribution<double> normal;
    Vec3 d;
    do {
        d = Vec3(normal(g), normal(g), normal(g));
    } while (d.squaredNorm() < 1e-300);
    return d.normalized();
}

Vec3 random_in_annulus(SplitMix64& g, double r_min, double r_max) {
    const double lr = std::log(r_min) + uniform01(g) * (std::log(r_max) - std::log(r_min));
    return std::exp(lr) * random_direction(g);
}

}  // namespace

void require_finite(const Velocity& v, const char* what) {
    if (!v.allFinite()) {
        std::ostringstream os;
        os << what << ": non-finite velocity (" << v(0) << ", " << v(1) << ", " << v(2) << ")";
        throw DomainError(os.str());
    }
}

Mat3 a_matrix(const Velocity& z) {
    const double r = checked_norm(z, "a_matrix");
    return projector_shape(z) / (r * r * r);
}

Vec3 b_drift(const Velocity& z) {
    const double r = checked_norm(z, "b_drift");
    return (-2.0 / (r * r * r)) * z;
}

Mat3 sigma_matrix(const Velocity& z) {
    const double r = checked_norm(z, "sigma_matrix");
    return sigma_shape(z) / (r * std::sqrt(r));
}

KernelTriple mollified_triple(const Velocity& z, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw DomainError("mollified_triple: epsilon must be a finite nonnegative number");
    }
    KernelTriple k;
    k.z = z;
    k.epsilon = epsilon;
    if (epsilon == 0.0) {
        k.a = a_matrix(z);
        k.b = b_drift(z);
        k.sigma = sigma_matrix(z);
        return k;
    }
    require_finite(z, "mollified_triple");
    const double rho = std::sqrt(z.squaredNorm() + epsilon * epsilon);
    const double inv3 = 1.0 / (rho * rho * rho);
    k.a = projector_shape(z) * inv3;
    k.b = (-2.0 * inv3) * z;
    k.sigma = sigma_shape(z) / (rho * std::sqrt(rho));
    return k;
}

bool LipschitzReport::branch_bounds_hold(double norm_gap) const {
    constexpr double tol = 1 + 1e-10;
    const double sigma_diff = std::sqrt(sigma_diff_sq);
    return sigma_diff <= norm_gap * sigma_near_rhs * tol
        && sigma_diff_sq <= norm_gap * sigma_far_rhs * tol
        && b_diff <= norm_gap * b_near_rhs * tol
        && b_diff <= norm_gap * b_far_rhs * tol
        && sigma_op_norm <= sigma_op_bound * tol
        && b_norm <= b_norm_bound * tol;
}

LipschitzReport lipschitz_check(const Velocity& z, const Velocity& zt) {
    const double r = checked_norm(z, "lipschitz_check");
    const double rt = checked_norm(zt, "lipschitz_check");
    const double d = (z - zt).norm();

    LipschitzReport rep;
    const Mat3 ds = sigma_matrix(z) - sigma_matrix(zt);
    rep.sigma_diff_sq = ds.squaredNorm();
    const double inv3 = 1.0 / (r * r * r) + 1.0 / (rt * rt * rt);
    rep.sigma_min_form = std::min(d * d * inv3, 1.0 / r + 1.0 / rt);
    rep.sigma_ratio = rep.sigma_min_form > 0.0 ? rep.sigma_diff_sq / rep.sigma_min_form : 0.0;

    rep.b_diff = (b_drift(z) - b_drift(zt)).norm();
    rep.b_min_form = std::min(d * inv3, 1.0 / (r * r) + 1.0 / (rt * rt));
    rep.b_ratio = rep.b_min_form > 0.0 ? rep.b_diff / rep.b_min_form : 0.0;

    rep.sigma_near_rhs = 2.5 * d * (std::pow(r, -1.5) + std::pow(rt, -1.5));
    rep.sigma_far_rhs = 2.0 * (1.0 / r + 1.0 / rt);
    rep.b_near_rhs = 8.0 * d * inv3;
    rep.b_far_rhs = 2.0 * (1.0 / (r * r) + 1.0 / (rt * rt));

    // sigma^T sigma has the same spectrum as a: {0, 1/|z|, 1/|z|}.
    Eigen::SelfAdjointEigenSolver<Mat3> es(a_matrix(z), Eigen::EigenvaluesOnly);
    rep.sigma_op_norm = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    rep.sigma_op_bound = 1.0 / std::sqrt(r);
    rep.b_norm = b_drift(z).norm();
    rep.b_norm_bound = 2.0 / (r * r);
    return rep;
}

LipschitzSweep lipschitz_sweep(std::size_t pairs, double r_min, double r_max, std::uint64_t seed, double norm_gap) {
    LipschitzSweep out;
    out.pairs = pairs;
    SplitMix64 g(stream_key({seed, 0x11u}));
    for (std::size_t k = 0; k < pairs; ++k) {
        const Vec3 z = random_in_annulus(g, r_min, r_max);
        // Half of the partners are local perturbations so that the
        // |z - zt| -> 0 branch is actually exercised.
        Vec3 zt;
        if (k % 2 == 0) {
            zt = random_in_annulus(g, r_min, r_max);
        } else {
            const double scale = std::exp(std::log(1e-6) * uniform01(g));
            zt = z + scale * z.norm() * random_direction(g);
            if (zt.norm() < r_min) zt = random_in_annulus(g, r_min, r_max);
        }
        const auto rep = lipschitz_check(z, zt);
        out.max_sigma_ratio = std::max(out.max_sigma_ratio, rep.sigma_ratio);
        out.max_b_ratio = std::max(out.max_b_ratio, rep.b_ratio);
        if (!rep.branch_bounds_hold(norm_gap)) ++out.branch_violations;
    }
    return out;
}

double IdentitySweep::max_error() const {
    return std::max({sigma_sq_vs_a, a_times_z, trace, eigenvalues, oddness, symmetry, energy, homogeneity});
}

IdentitySweep identity_sweep(std::size_t samples, double r_min, double r_max, std::uint64_t seed) {
    IdentitySweep s;
    s.samples = samples;
    SplitMix64 g(stream_key({seed, 0x22u}));
    for (std::size_t k = 0; k < samples; ++k) {
        const Vec3 z = random_in_annulus(g, r_min, r_max);
        const double r = z.norm();
        const Mat3 a = a_matrix(z);
        const Mat3 sg = sigma_matrix(z);
        const Vec3 b = b_drift(z);
        const double an = a.norm();

        s.sigma_sq_vs_a = std::max(s.sigma_sq_vs_a, (sg * sg.transpose() - a).norm() / an);
        s.a_times_z = std::max(s.a_times_z, (a * z).norm() / (an * r));
        s.trace = std::max(s.trace, std::abs(a.trace() - 2.0 / r) / (2.0 / r));
        s.symmetry = std::max(s.symmetry, (a - a.transpose()).norm());
        s.energy = std::max(s.energy, std::abs(a.trace() + b.dot(z)) / (2.0 / r));

        Eigen::SelfAdjointEigenSolver<Mat3> es(a, Eigen::EigenvaluesOnly);
        const Vec3 ev = es.eigenvalues();  // ascending
        const double inv = 1.0 / r;
        const double eerr = std::max({std::abs(ev(0)), std::abs(ev(1) - inv), std::abs(ev(2) - inv)}) / inv;
        s.eigenvalues = std::max(s.eigenvalues, eerr);

        const double odd_b = (b_drift(-z) + b).norm() / b.norm();
        const double odd_s = (sigma_matrix(-z) + sg).norm() / sg.norm();
        s.oddness = std::max({s.oddness, odd_b, odd_s});

        const double lambda = std::exp(uniform01(g) * 4.0 - 2.0);
        const Vec3 zl = lambda * z;
        const double h_a = (a_matrix(zl) - a / lambda).norm() / (an / lambda);
        const double h_b = (b_drift(zl) - b / (lambda * lambda)).norm() / (b.norm() / (lambda * lambda));
        const double h_s = (sigma_matrix(zl) - sg / std::sqrt(lambda)).norm() / (sg.norm() / std::sqrt(lambda));
        s.homogeneity = std::max({s.homogeneity, h_a, h_b, h_s});
    }
    return s;
}

}  // namespace lcl
