#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lcl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Velocity-space point. Any 3-vector of finite reals.
using Velocity = Vec3;

class SingularInput : public std::domain_error {
public:
    explicit SingularInput(const std::string& what) : std::domain_error(what) {}
};

class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Throws DomainError if any component is NaN or infinite.
void require_finite(const Velocity& v, const char* what);

/// Coulomb diffusion matrix a(z) = |z|^-3 (|z|^2 I - z z^T). Throws SingularInput at z = 0.
Mat3 a_matrix(const Velocity& z);

/// Drift b(z) = -2 |z|^-3 z, the row divergence of a.
Vec3 b_drift(const Velocity& z);

/// Square root of a: sigma(z) sigma(z)^T = a(z).
///
///   sigma(z) = |z|^-3/2 [  z2  -z3   0 ]
///                       [ -z1   0   z3 ]
///                       [   0  z1  -z2 ]
///
/// The null vector is (z3, z2, z1) and sigma(z)^T z = 0.
Mat3 sigma_matrix(const Velocity& z);

/// The linear part of sigma, without the |z|^-3/2 factor.
inline Mat3 sigma_shape(const Velocity& z) {
    Mat3 m;
    m << z(1), -z(2), 0.0,
        -z(0), 0.0, z(2),
         0.0, z(0), -z(1);
    return m;
}

struct KernelTriple {
    Velocity z;
    double epsilon = 0.0;
    Mat3 a;
    Mat3 sigma;
    Vec3 b;
};

/// Kernels with |z| replaced by (|z|^2 + eps^2)^1/2 in every scalar prefactor.
///
/// The matrix shapes (|z|^2 I - z z^T and the linear sigma shape) are kept, so
/// sigma_eps sigma_eps^T = a_eps, z is still in the kernel of a_eps and the
/// energy identity trace a_eps = -b_eps . z holds for every eps. At z = 0 with
/// eps > 0 all three vanish. eps = 0 gives the exact kernels.
KernelTriple mollified_triple(const Velocity& z, double epsilon);

/// Both sides of the two min-form Lipschitz inequalities, with the proof's
/// intermediate branch bounds. Matrix norms are Frobenius.
struct LipschitzReport {
    double sigma_diff_sq = 0.0;   ///< |sigma(z) - sigma(zt)|_F^2
    double sigma_min_form = 0.0;  ///< min{|z-zt|^2 (|z|^-3 + |zt|^-3), |z|^-1 + |zt|^-1}
    double sigma_ratio = 0.0;
    double b_diff = 0.0;          ///< |b(z) - b(zt)|
    double b_min_form = 0.0;      ///< min{|z-zt| (|z|^-3 + |zt|^-3), |z|^-2 + |zt|^-2}
    double b_ratio = 0.0;

    // Intermediate bounds from the proof.
    double sigma_near_rhs = 0.0;  ///< 5/2 |z-zt| (|z|^-3/2 + |zt|^-3/2), bounds |sigma(z) - sigma(zt)|
    double sigma_far_rhs = 0.0;   ///< 2 (|z|^-1 + |zt|^-1), bounds |sigma(z) - sigma(zt)|^2
    double b_near_rhs = 0.0;      ///< 8 |z-zt| (|z|^-3 + |zt|^-3)
    double b_far_rhs = 0.0;       ///< 2 (|z|^-2 + |zt|^-2)
    double sigma_op_norm = 0.0;   ///< largest singular value of sigma(z), at most |z|^-1/2
    double sigma_op_bound = 0.0;  ///< |z|^-1/2
    double b_norm = 0.0;          ///< |b(z)|, at most 2|z|^-2
    double b_norm_bound = 0.0;    ///< 2|z|^-2

    /// Branch constants 5/2 and 8, and |sigma(z)|_op <= |z|^-1/2, |b(z)| <= 2|z|^-2,
    /// checked with `norm_gap` slack for the Frobenius/operator difference.
    bool branch_bounds_hold(double norm_gap = 2.0) const;
};

LipschitzReport lipschitz_check(const Velocity& z, const Velocity& z_tilde);

/// Empirical constants over many random pairs.
struct LipschitzSweep {
    std::size_t pairs = 0;
    double max_sigma_ratio = 0.0;
    double max_b_ratio = 0.0;
    std::size_t branch_violations = 0;
};

/// Pairs drawn log-uniformly in radius on the annulus [r_min, r_max] with uniform
/// directions; deterministic given the seed.
LipschitzSweep lipschitz_sweep(std::size_t pairs, double r_min, double r_max, std::uint64_t seed,
                               double norm_gap = 2.0);

/// Worst relative errors of the algebraic identities over random z.
struct IdentitySweep {
    std::size_t samples = 0;
    double sigma_sq_vs_a = 0.0;  ///< |sigma sigma^T - a|_F / |a|_F
    double a_times_z = 0.0;      ///< |a z| / (|a|_F |z|)
    double trace = 0.0;          ///< |tr a - 2/|z|| / (2/|z|)
    double eigenvalues = 0.0;    ///< spectrum vs {0, 1/|z|, 1/|z|}, relative to 1/|z|
    double oddness = 0.0;        ///< |b(-z) + b(z)| / |b|, |sigma(-z) + sigma(z)|_F / |sigma|_F
    double symmetry = 0.0;       ///< |a - a^T|_F, exact zero expected
    double energy = 0.0;         ///< |tr a + b.z| relative to 2/|z|
    double homogeneity = 0.0;    ///< a, b, sigma scaling under z -> lambda z
    double max_error() const;
};

IdentitySweep identity_sweep(std::size_t samples, double r_min, double r_max, std::uint64_t seed);

}  // namespace lcl
