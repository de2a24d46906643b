#pragma once

#include "lcl/kernels.hpp"
#include "lcl/rng.hpp"

#include <cmath>
#include <random>

namespace lcl::test {

// Test-side randomness uses the standard library, independent of the code under test.
inline Vec3 random_vec(std::mt19937_64& g, double scale = 1.0) {
    std::normal_distribution<double> n;
    return scale * Vec3(n(g), n(g), n(g));
}

inline Vec3 random_in_shell(std::mt19937_64& g, double r_lo, double r_hi) {
    std::uniform_real_distribution<double> u(std::log(r_lo), std::log(r_hi));
    Vec3 d = random_vec(g);
    while (d.norm() < 1e-3) d = random_vec(g);
    return std::exp(u(g)) * d.normalized();
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace lcl::test
