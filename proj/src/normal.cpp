#include "lcl/normal.hpp"

#include "lcl/rng.hpp"

#include <algorithm>
#include <cstring>
#include <numbers>

namespace lcl {

namespace {

inline std::uint64_t to_bits(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
}

inline double from_bits(std::uint64_t u) {
    double x;
    std::memcpy(&x, &u, sizeof x);
    return x;
}

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

inline double log_unit(double x) {
    // x = m 2^e with m in [sqrt(1/2), sqrt(2)); log m = 2 atanh(f / (2 + f)), f = m - 1.
    const std::uint64_t bits = to_bits(x);
    const std::uint64_t mant = bits & 0x000fffffffffffffULL;
    // high = 1 when the mantissa in [1, 2) exceeds sqrt(2); it is then halved.
    const std::uint64_t high = mant > 0x0006a09e667f3bcdULL;
    const double m = from_bits(mant | (0x3ff0000000000000ULL - (high << 52)));
    const double e = static_cast<double>(static_cast<std::int64_t>(bits >> 52) - 1023 + static_cast<std::int64_t>(high));
    const double f = m - 1.0;
    // Minimax kernel for log(1 + f), |f| <= sqrt(2) - 1 (the fdlibm coefficients).
    const double s = f / (2.0 + f);
    const double z = s * s;
    const double w = z * z;
    const double t1 = w * (0.3999999999940941908 + w * (0.2222219843214978396 + w * 0.1531383769920937332));
    const double t2 = z * (0.6666666666666735130 + w * (0.2857142874366239149 + w * (0.1818357216161805012 +
                                                                                     w * 0.1479819860511658591)));
    const double r = t1 + t2;
    const double hfsq = 0.5 * f * f;
    const double log_m = f - (hfsq - s * (hfsq + r));
    return e * kLn2Hi + (log_m + e * kLn2Lo);
}

inline void sincos_turn(double t, double& s, double& c) {
    // t = q/4 + r with |r| <= 1/8; x = 2 pi r in [-pi/4, pi/4].
    const std::int64_t qi = static_cast<std::int64_t>(4.0 * t + 0.5);  // floor, the argument is positive
    const double q = static_cast<double>(qi);
    const double x = (2.0 * std::numbers::pi) * (t - 0.25 * q);
    const double z = x * x;
    // Minimax kernels on [-pi/4, pi/4] (the fdlibm coefficients).
    const double rs = 8.33333333332248946124e-03 +
                      z * (-1.98412698298579493134e-04 +
                           z * (2.75573137070700676789e-06 +
                                z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)));
    const double sx = x + z * x * (-1.66666666666666324348e-01 + z * rs);
    const double rc =
        z * (4.16666666666666019037e-02 +
             z * (-1.38888888888741095749e-03 +
                  z * (2.48015872894767294178e-05 +
                       z * (-2.75573143513906633035e-07 +
                            z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));
    const double hz = 0.5 * z;
    const double w = 1.0 - hz;
    const double cx = w + (((1.0 - w) - hz) + z * rc);
    const std::uint64_t quadrant = static_cast<std::uint64_t>(qi) & 3;
    // Odd quadrants swap sin and cos; signs are flipped through the sign bit.
    const std::uint64_t swap = 0 - (quadrant & 1);
    const std::uint64_t sb = to_bits(sx);
    const std::uint64_t cb = to_bits(cx);
    const std::uint64_t ss = (sb & ~swap) | (cb & swap);
    const std::uint64_t cc = (cb & ~swap) | (sb & swap);
    s = from_bits(ss ^ ((quadrant >> 1) << 63));
    c = from_bits(cc ^ ((((quadrant + 1) >> 1) & 1) << 63));
}

}  // namespace

double unit_log(double x) { return log_unit(x); }

void turn_sincos(double t, double& s, double& c) { sincos_turn(t, s, c); }

void fill_normals(std::uint64_t key, double scale, std::size_t count, double* out) {
    constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
    // Short separate passes over a block keep the long polynomial chains of
    // many elements in flight at once.
    constexpr std::size_t kBlock = 256;
    alignas(64) double radius[kBlock];
    alignas(64) double turn[kBlock];
    const std::size_t half = (count + 1) / 2;
    double* __restrict cos_part = out;
    double* __restrict sin_part = out + half;
    for (std::size_t k0 = 0; k0 < half; k0 += kBlock) {
        const std::size_t len = std::min(kBlock, half - k0);
        for (std::size_t j = 0; j < len; ++j) {
            const std::uint64_t k = k0 + j;
            // One 64-bit output per pair of normals: the high half gives the
            // radius uniform in (0, 1], the low half the angle in [0, 1).
            const std::uint64_t a = SplitMix64::mix(key + (k + 1) * gamma);
            radius[j] = static_cast<double>(static_cast<std::int64_t>((a >> 32) + 1)) * 0x1.0p-32;
            turn[j] = static_cast<double>(static_cast<std::int64_t>(a & 0xffffffffULL)) * 0x1.0p-32;
        }
        for (std::size_t j = 0; j < len; ++j) {
            radius[j] = scale * __builtin_sqrt(-2.0 * log_unit(radius[j]));
        }
        for (std::size_t j = 0; j < len; ++j) {
            double s, c;
            sincos_turn(turn[j], s, c);
            cos_part[k0 + j] = radius[j] * c;
            sin_part[k0 + j] = radius[j] * s;
        }
    }
}

}  // namespace lcl
