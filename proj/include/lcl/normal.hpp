#pragma once

#include <cstddef>
#include <cstdint>

namespace lcl {

/// Fills out[0, count) with independent N(0, scale^2) draws by the Box-Muller
/// transform of the counter-based SplitMix64 stream with state `key`. Normal k
/// depends only on (key, k, count). Writes up to out[count] (one slot of slack
/// when count is odd).
///
/// Each pair of normals comes from one SplitMix64 output split into two 32-bit
/// uniforms, so draws are bounded by scale * sqrt(64 log 2) ~ 6.66 scale.
///
/// The loop has no branches or library calls so it vectorizes; log and sincos
/// are evaluated by series accurate to a few ulp.
void fill_normals(std::uint64_t key, double scale, std::size_t count, double* out);

/// log x for x in (0, 1], the routine used by fill_normals.
double unit_log(double x);

/// sin and cos of 2 pi t for t in [0, 1), the routine used by fill_normals.
void turn_sincos(double t, double& s, double& c);

}  // namespace lcl
