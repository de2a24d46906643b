#include "lcl/oracles.hpp"

#include "lcl/osgood.hpp"
#include "lcl/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lcl::oracles {

namespace {

constexpr double kPi = std::numbers::pi;

void require_alpha(double alpha, const char* op) {
    if (!(alpha > -3.0)) {
        throw DomainError(std::string(op) + ": |u|^alpha is not locally integrable in R^3 for alpha <= -3");
    }
    if (alpha > 0.0) throw DomainError(std::string(op) + ": alpha must lie in (-3, 0]");
}

void require_eps(double eps, const char* op) {
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError(std::string(op) + ": eps must lie in (0, 1]");
}

nlohmann::json vec_json(const Velocity& v) { return nlohmann::json::array({v(0), v(1), v(2)}); }

// int_{r_lo}^{r_hi} r^alpha (int_{|u|=r} g(p + u) dS) dr, summed over components.
double centered_radial(const BoundedDensity& g, const Velocity& p, double alpha, double r_lo, double r_hi) {
    double total = 0.0;
    for (const auto& part : g.components()) {
        const auto bp = shell_breakpoints(part.component, p);
        const double hi = std::min(r_hi, bp.back());
        total += part.weight * radial_integral([&](double r) { return shell_integral(part.component, p, r); }, alpha,
                                               r_lo, hi, bp);
    }
    return total;
}

void orthonormal_frame(const Vec3& axis, Vec3& e1, Vec3& e2) {
    const Vec3 helper = std::abs(axis(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = axis.cross(helper).normalized();
    e2 = axis.cross(e1);
}

// int over the part of the sphere |u| = r around w that lies in the ball B(v, eps).
double capped_shell(const DensityComponent& c, const Velocity& w, const Velocity& v, double eps, double r) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(r > 0.0)) return 0.0;
    const Vec3 axis_raw = v - w;
    const double e = axis_raw.norm();
    const double mu_min = (r * r + e * e - eps * eps) / (2.0 * r * e);
    if (mu_min >= 1.0) return 0.0;
    if (mu_min <= -1.0) return shell_integral(c, w, r);
    const Vec3 axis = axis_raw / e;
    Vec3 e1, e2;
    orthonormal_frame(axis, e1, e2);
    auto over_phi = [&](double mu) {
        const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        auto f = [&](double phi) {
            const Vec3 u = r * (mu * axis + st * (std::cos(phi) * e1 + std::sin(phi) * e2));
            return component_density(c, w + u);
        };
        return gauss_kronrod<double, 21>::integrate(f, 0.0, 2.0 * kPi, 8, 1e-9);
    };
    return r * r * gauss_kronrod<double, 21>::integrate(over_phi, mu_min, 1.0, 8, 1e-9);
}

double psi_safe(double x) { return osgood::psi(std::max(0.0, x)); }

}  // namespace

nlohmann::json Report::to_json() const {
    return nlohmann::json{{"name", name},     {"parameters", parameters}, {"lhs", lhs},
                          {"budget", budget}, {"ratio", ratio},           {"stderr", stderr_},
                          {"seed", seed},     {"holds", holds}};
}

double ball_constant(double alpha) {
    require_alpha(alpha, "ball_constant");
    return 4.0 * kPi / (3.0 + alpha);
}

Report moment_bound(const BoundedDensity& g, double alpha, const Velocity& v) {
    require_alpha(alpha, "moment_bound");
    require_finite(v, "moment_bound");
    Report rep;
    rep.name = "moment_bound";
    rep.parameters = {{"alpha", alpha}, {"v", vec_json(v)}, {"linf", g.linf()}};
    rep.lhs = alpha == 0.0 ? 1.0 : centered_radial(g, v, alpha, 0.0, std::numeric_limits<double>::infinity());
    rep.budget = 1.0 + ball_constant(alpha) * g.linf();
    rep.ratio = rep.lhs / rep.budget;
    rep.holds = rep.lhs <= rep.budget;
    return rep;
}

Report near_singularity_bound(const BoundedDensity& g, double alpha, double eps, const Velocity& v,
                              const Velocity& w) {
    require_alpha(alpha, "near_singularity_bound");
    require_eps(eps, "near_singularity_bound");
    require_finite(v, "near_singularity_bound");
    require_finite(w, "near_singularity_bound");
    Report rep;
    rep.name = "near_singularity_bound";
    rep.parameters = {{"alpha", alpha}, {"eps", eps}, {"v", vec_json(v)}, {"w", vec_json(w)}, {"linf", g.linf()}};
    const double e = (v - w).norm();
    if (e <= 1e-14 * (1.0 + v.norm())) {
        rep.lhs = centered_radial(g, v, alpha, 0.0, eps);
    } else {
        double total = 0.0;
        for (const auto& part : g.components()) {
            auto bp = shell_breakpoints(part.component, w);
            bp.push_back(std::abs(e - eps));
            bp.push_back(e + eps);
            const double lo = std::max(0.0, e - eps);
            total += part.weight * radial_integral(
                                       [&](double r) { return capped_shell(part.component, w, v, eps, r); }, alpha,
                                       lo, e + eps, bp, 1e-9);
        }
        rep.lhs = total;
    }
    rep.budget = ball_constant(alpha) * g.linf() * std::pow(eps, 3.0 + alpha);
    rep.ratio = rep.lhs / rep.budget;
    rep.holds = rep.lhs <= rep.budget * (1.0 + 1e-9);
    return rep;
}

Report log_tail_bound(const BoundedDensity& g, double eps, const Velocity& v) {
    require_eps(eps, "log_tail_bound");
    require_finite(v, "log_tail_bound");
    Report rep;
    rep.name = "log_tail_bound";
    rep.parameters = {{"eps", eps}, {"v", vec_json(v)}, {"linf", g.linf()}};
    rep.lhs = centered_radial(g, v, -3.0, eps, std::numeric_limits<double>::infinity());
    rep.budget = 1.0 + 4.0 * kPi * g.linf() * std::log(1.0 / eps);
    rep.ratio = rep.lhs / rep.budget;
    rep.holds = rep.lhs <= rep.budget * (1.0 + 1e-9);
    return rep;
}

Report double_moment_bound(const BoundedDensity& g, double alpha, std::size_t pairs, std::uint64_t seed) {
    require_alpha(alpha, "double_moment_bound");
    if (pairs < 2) throw DomainError("double_moment_bound: need at least two pairs");
    SplitMix64 gx(stream_key({seed, 0xd1}));
    SplitMix64 gy(stream_key({seed, 0xd2}));
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const double d = (g.sample(gx) - g.sample(gy)).norm();
        const double x = alpha == 0.0 ? 1.0 : std::pow(d, alpha);
        const double delta = x - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (x - mean);
    }
    Report rep;
    rep.name = "double_moment_bound";
    rep.parameters = {{"alpha", alpha}, {"pairs", pairs}, {"linf", g.linf()}};
    rep.seed = seed;
    rep.lhs = mean;
    rep.stderr_ = std::sqrt(m2 / static_cast<double>(pairs - 1) / static_cast<double>(pairs));
    rep.budget = 1.0 + ball_constant(alpha) * g.linf();
    rep.ratio = rep.lhs / rep.budget;
    rep.holds = rep.lhs - 3.0 * rep.stderr_ <= rep.budget;
    return rep;
}

ScalingFit near_singularity_scaling(const BoundedDensity& g, double alpha, const Velocity& v, int levels) {
    ScalingFit fit;
    std::vector<double> lx, ly;
    for (int k = 1; k <= levels; ++k) {
        const double eps = std::ldexp(1.0, -k);
        const double lhs = near_singularity_bound(g, alpha, eps, v, v).lhs;
        fit.eps.push_back(eps);
        fit.lhs.push_back(lhs);
        lx.push_back(std::log(eps));
        ly.push_back(std::log(lhs));
    }
    const auto f = least_squares(lx, ly);
    fit.slope = f.slope;
    fit.r2 = f.r2;
    return fit;
}

ScalingFit log_tail_growth(const BoundedDensity& g, const Velocity& v, int levels) {
    ScalingFit fit;
    std::vector<double> lx;
    for (int k = 1; k <= levels; ++k) {
        const double eps = std::ldexp(1.0, -k);
        fit.eps.push_back(eps);
        fit.lhs.push_back(log_tail_bound(g, eps, v).lhs);
        lx.push_back(std::log(1.0 / eps));
    }
    const auto f = least_squares(lx, fit.lhs);
    fit.slope = f.slope;
    fit.r2 = f.r2;
    return fit;
}

CoupledKernelReport coupled_kernel_bound(const BoundedDensity& g, const Velocity& v, const Velocity& vt, int level) {
    require_finite(v, "coupled_kernel_bound");
    require_finite(vt, "coupled_kernel_bound");
    if (level < 0 || level > 4) throw DomainError("coupled_kernel_bound: level must be in [0, 4]");
    CoupledKernelReport rep;
    rep.level = level;
    const double delta = (v - vt).norm();
    rep.separation = delta;
    if (delta == 0.0) return rep;

    const int scale = 1 << level;
    const GaussRule radial = gauss_legendre(8);
    const GaussRule polar = gauss_legendre(24 * scale);
    const int n_phi = 16 * scale;
    const double panel = 0.5 / scale;

    const Vec3 axis = (vt - v) / delta;
    Vec3 e1, e2;
    orthonormal_frame(axis, e1, e2);
    std::vector<double> cos_phi(n_phi), sin_phi(n_phi);
    for (int k = 0; k < n_phi; ++k) {
        cos_phi[k] = std::cos(2.0 * kPi * k / n_phi);
        sin_phi[k] = std::sin(2.0 * kPi * k / n_phi);
    }

    auto sigma_of = [](const Vec3& z) -> Mat3 { return sigma_shape(z) * std::pow(z.norm(), -1.5); };
    auto b_of = [](const Vec3& z) {
        const double r = z.norm();
        return Vec3((-2.0 / (r * r * r)) * z);
    };

    double lhs_sigma = 0.0, lhs_b = 0.0;
    const Velocity centers[2] = {v, vt};
    for (int side = 0; side < 2; ++side) {
        const Velocity& p = centers[side];
        const Velocity& q = centers[1 - side];
        double r_max = 0.0;
        for (const auto& part : g.components()) {
            r_max = std::max(r_max, shell_breakpoints(part.component, p).back());
        }
        const double s_lo = std::log(delta * 1e-7);
        const double s_hi = std::log(r_max);
        const int panels = std::max(1, static_cast<int>(std::ceil((s_hi - s_lo) / panel)));
        const double h = (s_hi - s_lo) / panels;
        for (int pi = 0; pi < panels; ++pi) {
            for (std::size_t ri = 0; ri < radial.nodes.size(); ++ri) {
                const double s = s_lo + h * (pi + 0.5 * (radial.nodes[ri] + 1.0));
                const double r = std::exp(s);
                const double wr = 0.5 * h * radial.weights[ri] * r * r * r;  // r^2 dr = r^3 ds
                for (std::size_t mi = 0; mi < polar.nodes.size(); ++mi) {
                    const double mu = polar.nodes[mi];
                    const double st = std::sqrt(1.0 - mu * mu);
                    const double wm = wr * polar.weights[mi] * (2.0 * kPi / n_phi);
                    for (int k = 0; k < n_phi; ++k) {
                        const Vec3 x = p + r * (mu * axis + st * (cos_phi[k] * e1 + sin_phi[k] * e2));
                        const double dens = g(x);
                        if (dens == 0.0) continue;
                        const double dp4 = std::pow((x - p).squaredNorm(), 2);
                        const double dq4 = std::pow((x - q).squaredNorm(), 2);
                        const double weight = dq4 / (dp4 + dq4);
                        const Vec3 zv = v - x;
                        const Vec3 zt = vt - x;
                        const double fs = (sigma_of(zv) - sigma_of(zt)).squaredNorm();
                        const double fb = (b_of(zv) - b_of(zt)).norm();
                        lhs_sigma += wm * weight * dens * fs;
                        lhs_b += wm * weight * dens * fb;
                    }
                }
            }
        }
    }
    rep.lhs_sigma = lhs_sigma;
    rep.lhs_b = lhs_b;
    const double scale_g = 1.0 + g.linf();
    rep.ratio_sigma = lhs_sigma / (scale_g * psi_safe(delta * delta));
    rep.ratio_b = lhs_b / (scale_g * psi_safe(delta));
    return rep;
}

CoupledKernelSweep coupled_kernel_sweep(const BoundedDensity& g, const Velocity& base, const Velocity& direction,
                                        const std::vector<double>& separations, int level) {
    CoupledKernelSweep out;
    const Vec3 dir = direction.normalized();
    for (double sep : separations) {
        const auto c = coupled_kernel_bound(g, base, base + sep * dir, level);
        const auto f = coupled_kernel_bound(g, base, base + sep * dir, level + 1);
        out.coarse.push_back(c);
        out.fine.push_back(f);
        out.max_ratio_sigma = std::max({out.max_ratio_sigma, c.ratio_sigma, f.ratio_sigma});
        out.max_ratio_b = std::max({out.max_ratio_b, c.ratio_b, f.ratio_b});
        if (sep > 0.0) {
            const double ds = std::abs(f.ratio_sigma - c.ratio_sigma) / std::abs(f.ratio_sigma);
            const double db = std::abs(f.ratio_b - c.ratio_b) / std::abs(f.ratio_b);
            out.max_refinement_change = std::max({out.max_refinement_change, ds, db});
        }
    }
    return out;
}

void check_marginal(const std::vector<Velocity>& samples, const BoundedDensity& g, const char* which) {
    const std::size_t n = samples.size();
    if (n < 2) throw MarginalMismatch(std::string(which) + ": need at least two samples");
    Vec3 mean = Vec3::Zero();
    double m2 = 0.0;
    for (const auto& s : samples) {
        mean += s;
        m2 += s.squaredNorm();
    }
    mean /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    Vec3 var = Vec3::Zero();
    double var2 = 0.0;
    for (const auto& s : samples) {
        var += (s - mean).cwiseAbs2();
        var2 += (s.squaredNorm() - m2) * (s.squaredNorm() - m2);
    }
    var /= static_cast<double>(n - 1);
    var2 /= static_cast<double>(n - 1);
    const Vec3 target = g.mean();
    const double dn = static_cast<double>(n);
    for (int c = 0; c < 3; ++c) {
        if (std::abs(mean(c) - target(c)) > 3.0 * std::sqrt(var(c) / dn) + 1e-12) {
            std::ostringstream os;
            os << which << ": sample mean component " << c << " = " << mean(c) << " vs density mean " << target(c);
            throw MarginalMismatch(os.str());
        }
    }
    if (std::abs(m2 - g.second_moment()) > 3.0 * std::sqrt(var2 / dn) + 1e-12) {
        std::ostringstream os;
        os << which << ": sample second moment " << m2 << " vs density " << g.second_moment();
        throw MarginalMismatch(os.str());
    }
}

CoupledDriftReport coupled_drift_bound(const BoundedDensity& g, const BoundedDensity& gt, const Coupling& q,
                                       const Coupling& r, std::size_t pairs, std::uint64_t seed) {
    if (q.first.size() != q.second.size() || r.first.size() != r.second.size()) {
        throw MarginalMismatch("coupled_drift_bound: coupling sides differ in length");
    }
    check_marginal(q.first, g, "Q first marginal");
    check_marginal(q.second, gt, "Q second marginal");
    check_marginal(r.first, g, "R first marginal");
    check_marginal(r.second, gt, "R second marginal");
    if (pairs < 2) throw DomainError("coupled_drift_bound: need at least two pairs");

    CoupledDriftReport rep;
    rep.pairs = pairs;
    for (std::size_t i = 0; i < q.first.size(); ++i) rep.q_cost += (q.first[i] - q.second[i]).squaredNorm();
    rep.q_cost /= static_cast<double>(q.first.size());
    for (std::size_t i = 0; i < r.first.size(); ++i) rep.r_cost += (r.first[i] - r.second[i]).squaredNorm();
    rep.r_cost /= static_cast<double>(r.first.size());

    auto b_of = [](const Vec3& z) {
        const double n = z.norm();
        return Vec3((-2.0 / (n * n * n)) * z);
    };
    SplitMix64 rng(stream_key({seed, 0xc3}));
    const auto nq = q.first.size();
    const auto nr = r.first.size();
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(nq));
        const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(nr));
        const double gap = (q.first[i] - q.second[i]).norm();
        double x = 0.0;
        if (gap > 0.0) {
            const Vec3 z = q.first[i] - r.first[j];
            const Vec3 zt = q.second[i] - r.second[j];
            if (z.squaredNorm() > 0.0 && zt.squaredNorm() > 0.0) x = gap * (b_of(z) - b_of(zt)).norm();
        }
        const double delta = x - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (x - mean);
    }
    rep.lhs = mean;
    rep.stderr_ = std::sqrt(m2 / static_cast<double>(pairs - 1) / static_cast<double>(pairs));
    rep.budget = (1.0 + g.linf() + gt.linf()) * (psi_safe(rep.q_cost) + psi_safe(rep.r_cost));
    rep.ratio = rep.budget > 0.0 ? rep.lhs / rep.budget : 0.0;
    return rep;
}

Coupling translation_coupling(const BoundedDensity& g, const Velocity& shift, std::size_t n, std::uint64_t seed) {
    Coupling c;
    c.first = g.sample(n, seed);
    c.second.reserve(n);
    for (const auto& v : c.first) c.second.push_back(v + shift);
    return c;
}

Coupling reflection_coupling(const BoundedDensity& g, const Velocity& shift, std::size_t n, std::uint64_t seed) {
    Coupling c;
    c.first = g.sample(n, seed);
    const Vec3 m = g.mean();
    c.second.reserve(n);
    for (const auto& v : c.first) c.second.push_back(2.0 * m + shift - v);
    return c;
}

Coupling diagonal_coupling(const BoundedDensity& g, std::size_t n, std::uint64_t seed) {
    Coupling c;
    c.first = g.sample(n, seed);
    c.second = c.first;
    return c;
}

}  // namespace lcl::oracles
