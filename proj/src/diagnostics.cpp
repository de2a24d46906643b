#include "lcl/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace lcl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCutoff = 4.0;  // kernel support in bandwidths

void require_nonempty(std::span<const Velocity> v, const char* op) {
    if (v.empty()) throw DomainError(std::string(op) + ": empty ensemble");
}

std::int64_t pack_cell(std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::int64_t half = std::int64_t{1} << 20;
    auto clamp = [](std::int64_t c) { return std::clamp<std::int64_t>(c, -half, half - 1) + half; };
    return (clamp(x) << 42) | (clamp(y) << 21) | clamp(z);
}

std::int64_t cell_coord(double x, double size) {
    const double c = std::floor(x / size);
    return static_cast<std::int64_t>(std::clamp(c, -4.0e6, 4.0e6));
}

}  // namespace

MomentReport moments(std::span<const Velocity> v) {
    require_nonempty(v, "moments");
    MomentReport r;
    for (const auto& x : v) {
        r.momentum += x;
        r.energy += x.squaredNorm();
    }
    const double n = static_cast<double>(v.size());
    r.momentum /= n;
    r.energy /= n;
    r.m2 = r.energy;
    return r;
}

Vec3 directional_variance(std::span<const Velocity> v) {
    require_nonempty(v, "directional_variance");
    Vec3 mean = Vec3::Zero();
    for (const auto& x : v) mean += x;
    mean /= static_cast<double>(v.size());
    Vec3 var = Vec3::Zero();
    for (const auto& x : v) var += (x - mean).cwiseAbs2();
    return var / static_cast<double>(v.size());
}

double silverman_bandwidth(std::span<const Velocity> v) {
    require_nonempty(v, "silverman_bandwidth");
    const double s = std::sqrt(directional_variance(v).mean());
    return s * std::pow(4.0 / (5.0 * static_cast<double>(v.size())), 1.0 / 7.0);
}

KdeSummary kde_summary(std::span<const Velocity> v, double bandwidth) {
    if (v.size() < 2) throw DomainError("kde_summary: need at least two particles");
    KdeSummary out;
    double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(v);
    if (!(h > 0.0)) {
        out.degenerate = true;
        h = 1e-3 * std::max(1.0, v[0].norm());
    }
    out.bandwidth = h;
    const std::size_t n = v.size();
    const double cell = kCutoff * h;
    const double cut2 = cell * cell;
    const double inv2h2 = 1.0 / (2.0 * h * h);

    // Points sorted by cell; each cell maps to its index range in `order`.
    std::vector<std::array<std::int64_t, 3>> coord(n);
    std::vector<std::pair<std::int64_t, std::size_t>> keyed(n);
    for (std::size_t i = 0; i < n; ++i) {
        coord[i] = {cell_coord(v[i](0), cell), cell_coord(v[i](1), cell), cell_coord(v[i](2), cell)};
        keyed[i] = {pack_cell(coord[i][0], coord[i][1], coord[i][2]), i};
    }
    std::sort(keyed.begin(), keyed.end());
    std::unordered_map<std::int64_t, std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k;
        while (e < n && keyed[e].first == keyed[k].first) ++e;
        cells.emplace(keyed[k].first, std::make_pair(k, e));
        k = e;
    }

    std::vector<double> sum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = coord[i];
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells.find(pack_cell(c[0] + dx, c[1] + dy, c[2] + dz));
                    if (it == cells.end()) continue;
                    for (std::size_t k = it->second.first; k < it->second.second; ++k) {
                        const std::size_t j = keyed[k].second;
                        if (j <= i) continue;
                        const double d2 = (v[i] - v[j]).squaredNorm();
                        if (d2 > cut2) continue;
                        const double w = std::exp(-d2 * inv2h2);
                        sum[i] += w;
                        sum[j] += w;
                    }
                }
            }
        }
    }
    const double norm = std::pow(2.0 * kPi * h * h, -1.5) / static_cast<double>(n - 1);
    // An isolated particle gets the truncation level instead of log 0.
    const double floor = norm * std::exp(-0.5 * kCutoff * kCutoff);
    double entropy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::max(norm * sum[i], floor);
        out.linf = std::max(out.linf, f);
        entropy += std::log(f);
    }
    out.entropy = entropy / static_cast<double>(n);
    return out;
}

double linf_estimate(std::span<const Velocity> v, double bandwidth) { return kde_summary(v, bandwidth).linf; }

double entropy_estimate(std::span<const Velocity> v, double bandwidth) { return kde_summary(v, bandwidth).entropy; }

TestFunction bump(std::string name, const Vec3& center, double radius) {
    const double inv_r2 = 1.0 / (radius * radius);
    auto q_of = [=](const Vec3& v) { return (v - center).squaredNorm() * inv_r2; };
    TestFunction f;
    f.name = std::move(name);
    f.value = [=](const Vec3& v) {
        const double q = q_of(v);
        return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
    };
    f.gradient = [=](const Vec3& v) -> Vec3 {
        const double q = q_of(v);
        if (q >= 1.0) return Vec3::Zero();
        const double s = 1.0 - q;
        const double phi = std::exp(-1.0 / s);
        return (-phi / (s * s)) * (2.0 * inv_r2) * (v - center);
    };
    f.hessian = [=](const Vec3& v) -> Mat3 {
        const double q = q_of(v);
        if (q >= 1.0) return Mat3::Zero();
        const double s = 1.0 - q;
        const double phi = std::exp(-1.0 / s);
        const double d1 = -phi / (s * s);
        const double d2 = phi / (s * s * s * s) - 2.0 * phi / (s * s * s);
        const Vec3 dq = (2.0 * inv_r2) * (v - center);
        return d2 * dq * dq.transpose() + (d1 * 2.0 * inv_r2) * Mat3::Identity();
    };
    return f;
}

TestFunction plane_wave_cos(std::string name, const Vec3& k) {
    TestFunction f;
    f.name = std::move(name);
    f.value = [=](const Vec3& v) { return std::cos(k.dot(v)); };
    f.gradient = [=](const Vec3& v) -> Vec3 { return -std::sin(k.dot(v)) * k; };
    f.hessian = [=](const Vec3& v) -> Mat3 { return -std::cos(k.dot(v)) * k * k.transpose(); };
    return f;
}

TestFunction plane_wave_sin(std::string name, const Vec3& k) {
    TestFunction f;
    f.name = std::move(name);
    f.value = [=](const Vec3& v) { return std::sin(k.dot(v)); };
    f.gradient = [=](const Vec3& v) -> Vec3 { return std::cos(k.dot(v)) * k; };
    f.hessian = [=](const Vec3& v) -> Mat3 { return -std::sin(k.dot(v)) * k * k.transpose(); };
    return f;
}

std::vector<TestFunction> standard_battery() {
    std::vector<TestFunction> out;
    out.push_back({"one", [](const Vec3&) { return 1.0; }, [](const Vec3&) -> Vec3 { return Vec3::Zero(); },
                   [](const Vec3&) -> Mat3 { return Mat3::Zero(); }});
    for (int c = 0; c < 3; ++c) {
        out.push_back({"v" + std::to_string(c + 1), [c](const Vec3& v) { return v(c); },
                       [c](const Vec3&) -> Vec3 { return Vec3::Unit(c); },
                       [](const Vec3&) -> Mat3 { return Mat3::Zero(); }});
    }
    out.push_back({"energy", [](const Vec3& v) { return v.squaredNorm(); },
                   [](const Vec3& v) -> Vec3 { return 2.0 * v; },
                   [](const Vec3&) -> Mat3 { return 2.0 * Mat3::Identity(); }});
    out.push_back(bump("bump_center", Vec3::Zero(), 2.0));
    out.push_back(bump("bump_offset", Vec3(1.0, 0.0, 0.0), 1.5));
    out.push_back(plane_wave_cos("cos_k", Vec3(1.0, 0.5, 0.25)));
    out.push_back(plane_wave_sin("sin_k", Vec3(1.0, 0.5, 0.25)));
    return out;
}

double l_operator(const TestFunction& phi, const Velocity& v, const Velocity& v_star, double epsilon) {
    const KernelTriple k = mollified_triple(v - v_star, epsilon);
    return 0.5 * (k.a.cwiseProduct(phi.hessian(v))).sum() + k.b.dot(phi.gradient(v));
}

namespace {

// s_i = (1/N) sum_{j != i} L phi(v_i, v_j). Pairs at the same point are skipped
// in exact mode.
std::vector<double> row_sums(const TestFunction& phi, const std::vector<Velocity>& v, double epsilon) {
    const std::size_t n = v.size();
    const double eps2 = epsilon * epsilon;
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat3 h = phi.hessian(v[i]);
        const Vec3 g = phi.gradient(v[i]);
        const bool flat = h.isZero(0.0) && g.isZero(0.0);
        if (flat) continue;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vec3 z = v[i] - v[j];
            const double z2 = z.squaredNorm();
            if (z2 == 0.0 && epsilon == 0.0) continue;
            const double rho2 = z2 + eps2;
            const double inv3 = 1.0 / (rho2 * std::sqrt(rho2));
            // 1/2 tr(a H) with a = inv3 (|z|^2 I - z z^T), plus b . grad.
            const double tr_ah = inv3 * (z2 * h.trace() - z.dot(h * z));
            acc += 0.5 * tr_ah - 2.0 * inv3 * z.dot(g);
        }
        s[i] = acc / static_cast<double>(n);
    }
    return s;
}

}  // namespace

std::vector<WeakResidual> weak_residual(std::span<const Snapshot> snapshots, std::span<const TestFunction> battery,
                                        double epsilon) {
    if (snapshots.size() < 2) throw DomainError("weak_residual: need at least two snapshots");
    const std::size_t n = snapshots[0].velocities.size();
    if (n == 0) throw DomainError("weak_residual: empty snapshot");
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
        if (snapshots[k].velocities.size() != n) throw DomainError("weak_residual: snapshots differ in size");
        if (!(snapshots[k].time > snapshots[k - 1].time)) throw DomainError("weak_residual: times must increase");
    }
    const double dn = static_cast<double>(n);
    std::vector<WeakResidual> out;
    for (const auto& phi : battery) {
        std::vector<double> prev = row_sums(phi, snapshots[0].velocities, epsilon);
        for (std::size_t k = 1; k < snapshots.size(); ++k) {
            const auto& a = snapshots[k - 1];
            const auto& b = snapshots[k];
            std::vector<double> next = row_sums(phi, b.velocities, epsilon);
            const double half_dt = 0.5 * (b.time - a.time);
            WeakResidual r;
            r.phi = phi.name;
            r.t0 = a.time;
            r.t1 = b.time;
            std::vector<double> per(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double inc = phi.value(b.velocities[i]) - phi.value(a.velocities[i]);
                const double quad = half_dt * (prev[i] + next[i]);
                r.lhs += inc;
                r.rhs += quad;
                per[i] = inc - quad;
            }
            r.lhs /= dn;
            r.rhs /= dn;
            r.residual = r.lhs - r.rhs;
            double mean = 0.0;
            for (double x : per) mean += x;
            mean /= dn;
            double var = 0.0;
            for (double x : per) var += (x - mean) * (x - mean);
            const double se = n > 1 ? std::sqrt(var / (dn - 1.0) / dn) : 0.0;
            r.stderr_ = std::max(se, 1e-15);
            out.push_back(std::move(r));
            prev = std::move(next);
        }
    }
    return out;
}

}  // namespace lcl
