#include "lcl/particle.hpp"

#include "lcl/normal.hpp"
#include "lcl/rng.hpp"
#include "lcl/transport.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lcl {

namespace {

constexpr std::uint64_t kPairNoiseTag = 0x9a17;
constexpr std::uint64_t kLinearNoiseTag = 0x11e4;
constexpr std::uint64_t kInitTag = 0x1a17;

struct PairParams {
    double drift_scale;  // dt / N
    double eps2;
    double skip2;        // pairs with |z|^2 below this are skipped; -1 unless epsilon = 0
    double cap;          // drift coefficient cap, 0.5 for the tamed scheme, else infinite
};

// Contribution of the pair (i, j) to particle i, with z = V_i - V_j and g the
// increment dB^ij already scaled by N^-1/2. Particle j receives the negative.
// Both step paths call this, so they round identically.
inline void pair_term(PairParams p, double zx, double zy, double zz, double g0, double g1, double g2,
                      double& cx, double& cy, double& cz, int& skipped, int& capped) {
    const double z2 = zx * zx + zy * zy + zz * zz;
    const double r2 = z2 + p.eps2;
    const double rho = std::sqrt(r2);
    const double inv3 = 1.0 / (r2 * rho);
    const double sf = std::sqrt(inv3);
    double dcoef = 2.0 * p.drift_scale * inv3;
    capped = dcoef > p.cap;
    dcoef = std::min(dcoef, p.cap);
    const double nx = sf * (zy * g0 - zz * g1);
    const double ny = sf * (zz * g2 - zx * g0);
    const double nz = sf * (zx * g1 - zy * g2);
    const double dx = nx - dcoef * zx;
    const double dy = ny - dcoef * zy;
    const double dz = nz - dcoef * zz;
    skipped = z2 < p.skip2;
    cx = skipped ? 0.0 : dx;
    cy = skipped ? 0.0 : dy;
    cz = skipped ? 0.0 : dz;
}

struct RowCounts {
    std::size_t skipped = 0;
    std::size_t capped = 0;
};

// pair_term of (i, j_t) for t < count, with j_t's coordinates in xj, yj, zj and
// its increment in g0, g1, g2. Kept free of aliasing so it vectorizes.
RowCounts pair_row(PairParams p, double xi, double yi, double zi, std::size_t count, const double* __restrict xj,
                   const double* __restrict yj, const double* __restrict zj, const double* __restrict g0,
                   const double* __restrict g1, const double* __restrict g2, double* __restrict cx,
                   double* __restrict cy, double* __restrict cz) {
    RowCounts counts;
    for (std::size_t t = 0; t < count; ++t) {
        int sk, cp;
        pair_term(p, xi - xj[t], yi - yj[t], zi - zj[t], g0[t], g1[t], g2[t], cx[t], cy[t], cz[t], sk, cp);
        counts.skipped += static_cast<std::size_t>(sk);
        counts.capped += static_cast<std::size_t>(cp);
    }
    return counts;
}

// sum_t c[t] accumulated in 8 interleaved partial sums combined pairwise, an
// order that vectorizes without reassociation. Both step paths use it.
inline double lane_sum(const double* __restrict c, std::size_t len) {
    double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t t = 0;
    for (; t + 8 <= len; t += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += c[t + l];
    }
    for (std::size_t l = 0; t + l < len; ++l) acc[l] += c[t + l];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Increments of one row: count triples, each N(0, scale^2). Component d of
// triple t is g[d * count + t]; g needs room for 3 count + 1 values.
void fill_row(std::uint64_t key, double scale, std::size_t count, double* g) { fill_normals(key, scale, 3 * count, g); }

inline std::size_t row_buffer_size(std::size_t count) { return 3 * count + 1; }

struct Soa {
    std::vector<double> x, y, z, ax, ay, az;

    void load(const std::vector<Velocity>& v) {
        const std::size_t n = v.size();
        x.resize(n);
        y.resize(n);
        z.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = v[i](0);
            y[i] = v[i](1);
            z[i] = v[i](2);
        }
        ax.assign(n, 0.0);
        ay.assign(n, 0.0);
        az.assign(n, 0.0);
    }
};

PairParams params_of(const SimConfig& c, std::size_t n) {
    return {c.dt / static_cast<double>(n), c.epsilon * c.epsilon,
            c.epsilon == 0.0 ? kSkipDistance * kSkipDistance : -1.0,
            c.scheme == Scheme::tamed_euler ? 0.5 : std::numeric_limits<double>::infinity()};
}

int thread_count(const SimConfig& c) {
#ifdef _OPENMP
    return std::max(1, c.threads);
#else
    (void)c;
    return 1;
#endif
}

// Row-ordered pair loop: each unordered pair is evaluated once.
StepStats accumulate_serial(std::span<Soa> systems, PairParams p, std::uint64_t seed, std::uint64_t step,
                            double noise_scale) {
    const std::size_t n = systems[0].x.size();
    std::vector<double> g(row_buffer_size(n)), cx(n), cy(n), cz(n);
    StepStats stats;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t m = n - 1 - i;
        fill_row(stream_key({seed, kPairNoiseTag, step, i}), noise_scale, m, g.data());
        const double* g0 = g.data();
        const double* g1 = g0 + m;
        const double* g2 = g1 + m;
        for (std::size_t s = 0; s < systems.size(); ++s) {
            Soa& sys = systems[s];
            const double xi = sys.x[i], yi = sys.y[i], zi = sys.z[i];
            const double* xj = sys.x.data() + i + 1;
            const double* yj = sys.y.data() + i + 1;
            const double* zj = sys.z.data() + i + 1;
            double* axj = sys.ax.data() + i + 1;
            double* ayj = sys.ay.data() + i + 1;
            double* azj = sys.az.data() + i + 1;
            const RowCounts counts =
                pair_row(p, xi, yi, zi, m, xj, yj, zj, g0, g1, g2, cx.data(), cy.data(), cz.data());
            for (std::size_t t = 0; t < m; ++t) {
                axj[t] -= cx[t];
                ayj[t] -= cy[t];
                azj[t] -= cz[t];
            }
            sys.ax[i] += lane_sum(cx.data(), m);
            sys.ay[i] += lane_sum(cy.data(), m);
            sys.az[i] += lane_sum(cz.data(), m);
            if (s == 0) {
                stats.skipped_pairs += counts.skipped;
                stats.capped_pairs += counts.capped;
            }
        }
    }
    return stats;
}

#ifdef _OPENMP
// Particle-ordered loop over all partners in ascending order, reproducing the
// serial summation order exactly. Each pair is evaluated from both ends.
StepStats accumulate_threaded(std::span<Soa> systems, PairParams p, std::uint64_t seed, std::uint64_t step,
                              double noise_scale, int threads) {
    const std::size_t n = systems[0].x.size();
    std::vector<std::size_t> offset(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + row_buffer_size(n - 1 - i);
    std::vector<double> g(offset[n]);
    const long long rows = static_cast<long long>(n);

#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (long long ii = 0; ii < rows; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        fill_row(stream_key({seed, kPairNoiseTag, step, i}), noise_scale, n - 1 - i, g.data() + offset[i]);
    }

    std::size_t skipped_total = 0, capped_total = 0;
    for (Soa& sys : systems) {
        std::size_t skipped_sys = 0, capped_sys = 0;
#pragma omp parallel num_threads(threads) reduction(+ : skipped_sys, capped_sys)
        {
            std::vector<double> cx(n), cy(n), cz(n);
#pragma omp for schedule(dynamic, 16)
            for (long long ll = 0; ll < rows; ++ll) {
                const auto l = static_cast<std::size_t>(ll);
                int sk, cp;
                // Partners m < l: the pair is (m, l), seen from m.
                for (std::size_t m = 0; m < l; ++m) {
                    const std::size_t len_m = n - 1 - m;
                    const double* gm = g.data() + offset[m] + (l - m - 1);
                    pair_term(p, sys.x[m] - sys.x[l], sys.y[m] - sys.y[l], sys.z[m] - sys.z[l], gm[0], gm[len_m],
                              gm[2 * len_m], cx[m], cy[m], cz[m], sk, cp);
                }
                double sx = 0.0, sy = 0.0, sz = 0.0;
                for (std::size_t m = 0; m < l; ++m) {
                    sx -= cx[m];
                    sy -= cy[m];
                    sz -= cz[m];
                }
                const std::size_t len = n - 1 - l;
                const double* a = g.data() + offset[l];
                const double* b = a + len;
                const double* c = b + len;
                const RowCounts counts = pair_row(p, sys.x[l], sys.y[l], sys.z[l], len, sys.x.data() + l + 1,
                                                  sys.y.data() + l + 1, sys.z.data() + l + 1, a, b, c, cx.data(),
                                                  cy.data(), cz.data());
                skipped_sys += counts.skipped;
                capped_sys += counts.capped;
                sys.ax[l] = sx + lane_sum(cx.data(), len);
                sys.ay[l] = sy + lane_sum(cy.data(), len);
                sys.az[l] = sz + lane_sum(cz.data(), len);
            }
        }
        if (&sys == &systems[0]) {
            skipped_total = skipped_sys;
            capped_total = capped_sys;
        }
    }
    return {skipped_total, capped_total};
}
#endif

[[noreturn]] void report_failure(const std::vector<Velocity>& before, const SimConfig& c, std::uint64_t step) {
    const std::size_t n = before.size();
    double min_d = std::numeric_limits<double>::infinity();
    double max_drift = 0.0;
    const double eps2 = c.epsilon * c.epsilon;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 drift = Vec3::Zero();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vec3 z = before[i] - before[j];
            const double z2 = z.squaredNorm();
            min_d = std::min(min_d, std::sqrt(z2));
            const double r2 = z2 + eps2;
            if (r2 > 0.0) drift += (-2.0 / (r2 * std::sqrt(r2))) * z;
        }
        max_drift = std::max(max_drift, drift.norm() / static_cast<double>(n));
    }
    std::ostringstream os;
    os << "non-finite velocity after step " << step << " (smallest pair distance " << min_d << ", largest drift "
       << max_drift << ")";
    throw NumericalFailure(os.str(), step, min_d, max_drift);
}

StepStats step_systems(std::span<Ensemble* const> ensembles, const SimConfig& config) {
    const std::size_t n = ensembles[0]->velocities.size();
    for (Ensemble* e : ensembles) {
        if (e->velocities.size() != n) throw DomainError("step: ensembles differ in size");
        if (e->step != ensembles[0]->step) throw DomainError("step: ensembles are at different steps");
    }
    const std::uint64_t k = ensembles[0]->step;
    StepStats stats;
    if (n >= 2) {
        std::vector<Soa> systems(ensembles.size());
        for (std::size_t s = 0; s < ensembles.size(); ++s) systems[s].load(ensembles[s]->velocities);
        const PairParams p = params_of(config, n);
        const double noise_scale = std::sqrt(config.dt / static_cast<double>(n));
        const int threads = thread_count(config);
#ifdef _OPENMP
        stats = threads > 1 ? accumulate_threaded(systems, p, config.seed, k, noise_scale, threads)
                            : accumulate_serial(systems, p, config.seed, k, noise_scale);
#else
        (void)threads;
        stats = accumulate_serial(systems, p, config.seed, k, noise_scale);
#endif
        for (std::size_t s = 0; s < ensembles.size(); ++s) {
            auto& v = ensembles[s]->velocities;
            const std::vector<Velocity> before = v;
            bool finite = true;
            for (std::size_t i = 0; i < n; ++i) {
                v[i] += Vec3(systems[s].ax[i], systems[s].ay[i], systems[s].az[i]);
                finite = finite && v[i].allFinite();
            }
            if (!finite) report_failure(before, config, k);
        }
    }
    for (Ensemble* e : ensembles) {
        e->step = k + 1;
        e->time = static_cast<double>(k + 1) * config.dt;
    }
    return stats;
}

TrajectoryRow base_row(const Ensemble& e, const SimConfig& c) {
    TrajectoryRow row;
    row.t = e.time;
    const MomentReport m = moments(e.velocities);
    row.momentum = m.momentum;
    row.energy = m.energy;
    if (c.kde && e.velocities.size() >= 2) {
        const KdeSummary k = kde_summary(e.velocities, c.kde_bandwidth);
        row.entropy = k.entropy;
        row.linf = k.linf;
    }
    return row;
}

double rho_hat(const Ensemble& a, const Ensemble& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.velocities.size(); ++i) s += (a.velocities[i] - b.velocities[i]).squaredNorm();
    return s / static_cast<double>(a.velocities.size());
}

bool record_now(std::size_t k, std::size_t total, std::size_t every) { return k % every == 0 || k == total; }

}  // namespace

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

void validate(const SimConfig& c) {
    auto fail = [](const std::string& m) { throw DomainError("config: " + m); };
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("dt must be positive");
    if (!(c.horizon >= c.dt) || !std::isfinite(c.horizon)) fail("horizon must be at least dt");
    if (c.n < 1) fail("n must be at least 1");
    if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) fail("epsilon must be nonnegative");
    if (c.epsilon == 0.0 && c.scheme != Scheme::tamed_euler) fail("epsilon = 0 requires the tamed scheme");
    if (c.record_every < 1) fail("record_every must be at least 1");
    if (c.threads < 1) fail("threads must be at least 1");
    if (!std::isfinite(c.kde_bandwidth)) fail("kde_bandwidth must be finite");
}

Ensemble init_ensemble(const Source& source, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DomainError("init_ensemble: n must be at least 1");
    Ensemble e;
    if (const auto* g = std::get_if<BoundedDensity>(&source)) {
        e.velocities = g->sample(n, stream_key({seed, kInitTag}));
    } else if (const auto* a = std::get_if<AnisotropicGaussian>(&source)) {
        require_finite(a->mean, "init_ensemble");
        if (!(a->variances.array() > 0.0).all() || !a->variances.allFinite()) {
            throw DomainError("init_ensemble: variances must be positive");
        }
        SplitMix64 rng(stream_key({seed, kInitTag, 1}));
        boost::random::normal_distribution<double> normal;
        const Vec3 sd = a->variances.cwiseSqrt();
        e.velocities.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 x(normal(rng), normal(rng), normal(rng));
            e.velocities.push_back(a->mean + sd.cwiseProduct(x));
        }
    } else {
        const auto& samples = std::get<std::vector<Velocity>>(source);
        if (samples.size() != n) {
            throw DomainError("init_ensemble: sample set has " + std::to_string(samples.size()) +
                              " velocities, expected " + std::to_string(n));
        }
        for (const auto& v : samples) require_finite(v, "init_ensemble");
        e.velocities = samples;
    }
    return e;
}

StepStats step(Ensemble& state, const SimConfig& config) {
    Ensemble* one[] = {&state};
    return step_systems(one, config);
}

StepStats step_coupled(CoupledEnsemble& state, const SimConfig& config) {
    Ensemble* two[] = {&state.first, &state.second};
    return step_systems(two, config);
}

Trajectory simulate(const SimConfig& config, Ensemble initial) {
    validate(config);
    if (initial.velocities.size() != config.n) throw DomainError("simulate: ensemble size differs from config n");
    Trajectory out;
    const std::size_t total = config.steps();
    std::size_t skipped = 0;
    auto record = [&](const Ensemble& e) {
        TrajectoryRow row = base_row(e, config);
        row.skipped_pairs = skipped;
        skipped = 0;
        out.rows.push_back(row);
        if (config.keep_snapshots) out.snapshots.push_back({e.time, e.velocities});
    };
    Ensemble state = std::move(initial);
    record(state);
    for (std::size_t k = 1; k <= total; ++k) {
        skipped += step(state, config).skipped_pairs;
        if (record_now(k, total, config.record_every)) record(state);
    }
    out.final = std::move(state);
    return out;
}

CoupledTrajectory simulate_coupled(const SimConfig& config, Ensemble first, Ensemble second,
                                   const CoupleOptions& options) {
    validate(config);
    if (first.velocities.size() != config.n || second.velocities.size() != config.n) {
        throw DomainError("simulate_coupled: ensemble size differs from config n");
    }
    if (!(options.osgood_constant >= 0.0)) throw DomainError("simulate_coupled: osgood_constant must be nonnegative");
    CoupledTrajectory out;
    const std::size_t n = config.n;
    if (options.pair_initial) {
        out.initial_pairing = optimal_pairing(EmpiricalMeasure(first.velocities), EmpiricalMeasure(second.velocities)).pairing;
        std::vector<Velocity> reordered(n);
        for (std::size_t i = 0; i < n; ++i) reordered[i] = second.velocities[out.initial_pairing[i]];
        second.velocities = std::move(reordered);
    } else {
        out.initial_pairing.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.initial_pairing[i] = i;
    }
    SimConfig with_kde = config;
    with_kde.kde = true;

    CoupledEnsemble state{std::move(first), std::move(second)};
    const std::size_t total = config.steps();
    std::size_t skipped = 0;
    std::vector<double> gamma_t, gamma_v;
    auto record = [&](bool w2_now) {
        TrajectoryRow a = base_row(state.first, with_kde);
        TrajectoryRow b = base_row(state.second, with_kde);
        const double r = rho_hat(state.first, state.second);
        a.rho_hat = b.rho_hat = r;
        if (w2_now) {
            a.w2 = b.w2 = w2_exact(EmpiricalMeasure(state.first.velocities), EmpiricalMeasure(state.second.velocities))
                              .distance;
        }
        a.skipped_pairs = b.skipped_pairs = skipped;
        skipped = 0;
        out.first.push_back(a);
        out.second.push_back(b);
        gamma_t.push_back(state.first.time);
        gamma_v.push_back(options.osgood_constant * (1.0 + *a.linf + *b.linf));
    };
    record(true);
    std::size_t rows = 1;
    for (std::size_t k = 1; k <= total; ++k) {
        skipped += step_coupled(state, config).skipped_pairs;
        if (record_now(k, total, config.record_every)) {
            const bool w2_now = options.w2_every > 0 && (rows % options.w2_every == 0 || k == total);
            record(w2_now);
            ++rows;
        }
    }
    const double horizon = state.first.time;
    const osgood::Problem problem{*out.first.front().rho_hat,
                                  osgood::StepFunction(gamma_t, gamma_v, std::max(horizon, gamma_t.back()))};
    for (std::size_t k = 0; k < out.first.size(); ++k) {
        EnvelopeRow e;
        e.t = gamma_t[k];
        e.gamma = gamma_v[k];
        e.integral_gamma = problem.gamma.integral(e.t);
        e.envelope = osgood::envelope(problem, e.t);
        e.rho_hat = *out.first[k].rho_hat;
        out.envelope.push_back(e);
    }
    out.final = std::move(state);
    return out;
}

std::vector<StabilityRow> stability_sequence(const SimConfig& config, const Ensemble& base, const Vec3& direction,
                                             const std::vector<double>& gaps, const CoupleOptions& options) {
    if (!(direction.norm() > 0.0)) throw DomainError("stability_sequence: direction must be nonzero");
    const Vec3 unit = direction.normalized();
    std::vector<StabilityRow> out;
    for (double gap : gaps) {
        if (!(gap >= 0.0)) throw DomainError("stability_sequence: gaps must be nonnegative");
        Ensemble shifted = base;
        for (auto& v : shifted.velocities) v += gap * unit;
        const CoupledTrajectory run = simulate_coupled(config, base, shifted, options);
        StabilityRow row;
        row.gap = gap;
        row.initial_w2_sq = *run.first.front().rho_hat;
        for (const auto& r : run.first) {
            row.sup_rho_hat = std::max(row.sup_rho_hat, *r.rho_hat);
            if (r.w2) row.sup_w2_sq = std::max(row.sup_w2_sq, *r.w2 * *r.w2);
        }
        row.gamma_total = run.envelope.back().integral_gamma;
        const double a = row.initial_w2_sq;
        row.certificate = osgood::stability_certificate(std::span<const double>(&a, 1), row.gamma_total).front();
        out.push_back(row);
    }
    return out;
}

LinearTrajectory simulate_linear(const Ensemble& background, const std::vector<Velocity>& x0, const SimConfig& config,
                                 const LinearOptions& options) {
    if (background.velocities.empty()) throw DomainError("simulate_linear: empty background");
    if (x0.empty()) throw DomainError("simulate_linear: no test particles");
    SimConfig c = config;
    c.n = background.velocities.size();
    validate(c);
    if (options.record_every < 1) throw DomainError("simulate_linear: record_every must be at least 1");
    for (const auto& x : x0) require_finite(x, "simulate_linear");

    const std::size_t nb = background.velocities.size();
    const PairParams p = params_of(c, nb);
    const double noise_scale = std::sqrt(c.dt / static_cast<double>(nb));
    const std::size_t total = c.steps();
    LinearTrajectory out;
    std::vector<Velocity> x = x0;
    out.times.push_back(0.0);
    out.positions.push_back(x);
    std::vector<double> g(row_buffer_size(nb), 0.0);
    const double* g0 = g.data();
    const double* g1 = g0 + nb;
    const double* g2 = g1 + nb;
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t m = 0; m < x.size(); ++m) {
            if (!options.drift_only) {
                fill_row(stream_key({c.seed, kLinearNoiseTag, k, m}), noise_scale, nb, g.data());
            }
            double sx = 0.0, sy = 0.0, sz = 0.0;
            for (std::size_t j = 0; j < nb; ++j) {
                const Vec3& v = background.velocities[j];
                double cx, cy, cz;
                int sk, cp;
                pair_term(p, x[m](0) - v(0), x[m](1) - v(1), x[m](2) - v(2), g0[j], g1[j], g2[j], cx, cy, cz, sk, cp);
                out.skipped_pairs += static_cast<std::size_t>(sk);
                sx += cx;
                sy += cy;
                sz += cz;
            }
            x[m] += Vec3(sx, sy, sz);
            if (!x[m].allFinite()) {
                throw NumericalFailure("non-finite test particle at step " + std::to_string(k), k,
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN());
            }
        }
        if (record_now(k + 1, total, options.record_every)) {
            out.times.push_back(static_cast<double>(k + 1) * c.dt);
            out.positions.push_back(x);
        }
    }
    return out;
}

}  // namespace lcl
