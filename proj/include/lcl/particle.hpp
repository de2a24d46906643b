#pragma once

#include "lcl/density.hpp"
#include "lcl/diagnostics.hpp"
#include "lcl/osgood.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace lcl {

enum class Scheme { euler_maruyama, tamed_euler };

struct SimConfig {
    std::size_t n = 1000;
    double dt = 1e-3;
    double horizon = 1.0;
    double epsilon = 0.1;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double kde_bandwidth = 0.0;  ///< <= 0: Silverman's rule
    std::size_t record_every = 10;
    bool kde = true;             ///< entropy and linf columns
    bool keep_snapshots = false;
    int threads = 1;

    /// Number of steps, horizon / dt rounded to the nearest integer.
    std::size_t steps() const;
};

/// Throws DomainError: dt > 0, horizon >= dt, n >= 1, epsilon >= 0, record_every >= 1,
/// threads >= 1, epsilon = 0 only with the tamed scheme.
void validate(const SimConfig& config);

/// Pairs closer than this are skipped when epsilon = 0.
inline constexpr double kSkipDistance = 1e-8;

struct Ensemble {
    std::vector<Velocity> velocities;
    std::uint64_t step = 0;  ///< steps taken; the noise of the next step is keyed by it
    double time = 0.0;
};

struct CoupledEnsemble {
    Ensemble first;
    Ensemble second;  ///< particle i is coupled to particle i of first
};

/// Gaussian with a diagonal covariance.
struct AnisotropicGaussian {
    Velocity mean = Velocity::Zero();
    Vec3 variances = Vec3::Ones();
};

/// Where initial velocities come from: a density, an anisotropic Gaussian, or
/// explicit samples (taken as they are).
using Source = std::variant<BoundedDensity, AnisotropicGaussian, std::vector<Velocity>>;

/// Deterministic given the seed. Explicit samples must number exactly n.
Ensemble init_ensemble(const Source& source, std::size_t n, std::uint64_t seed);

class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, std::uint64_t step, double min_pair_distance, double max_drift)
        : std::runtime_error(what), step(step), min_pair_distance(min_pair_distance), max_drift(max_drift) {}
    std::uint64_t step;
    double min_pair_distance;
    double max_drift;
};

struct StepStats {
    std::size_t skipped_pairs = 0;
    std::size_t capped_pairs = 0;
};

/// One step of the pairwise particle system
///   V_i += (dt/N) sum_{j != i} b_eps(V_i - V_j) + N^-1/2 sum_{j != i} sigma_eps(V_i - V_j) dB^ij,
/// with dB^ij = dB^ji ~ N(0, dt I) drawn from a stream keyed by (seed, step, min(i, j)).
/// The threaded path is bitwise identical to the serial one. Throws NumericalFailure
/// if the result is not finite.
StepStats step(Ensemble& state, const SimConfig& config);

/// One step of both systems with the same increments dB^ij.
StepStats step_coupled(CoupledEnsemble& state, const SimConfig& config);

/// One recorded row of a trajectory. Empty optionals are blank CSV fields.
struct TrajectoryRow {
    double t = 0.0;
    double mass = 1.0;
    Vec3 momentum = Vec3::Zero();
    double energy = 0.0;
    std::optional<double> entropy;
    std::optional<double> linf;
    std::optional<double> rho_hat;
    std::optional<double> w2;
    std::size_t skipped_pairs = 0;  ///< since the previous row
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    std::vector<Snapshot> snapshots;  ///< at every row when keep_snapshots
    Ensemble final;
};

Trajectory simulate(const SimConfig& config, Ensemble initial);

struct CoupleOptions {
    bool pair_initial = true;       ///< reorder `second` by the optimal pairing first
    std::size_t w2_every = 10;      ///< exact W2 every this many rows (0: never, t = 0 always)
    double osgood_constant = 1.0;   ///< C in gamma(s) = C (1 + ||f_s||_inf + ||ft_s||_inf)
};

struct EnvelopeRow {
    double t = 0.0;
    double gamma = 0.0;
    double integral_gamma = 0.0;
    double envelope = 0.0;
    double rho_hat = 0.0;
};

struct CoupledTrajectory {
    std::vector<TrajectoryRow> first;   ///< rho_hat and w2 are filled in both
    std::vector<TrajectoryRow> second;
    std::vector<EnvelopeRow> envelope;
    std::vector<std::size_t> initial_pairing;
    CoupledEnsemble final;
};

/// The coupled experiment: pair by optimal transport, evolve with shared noise,
/// track rho_hat = (1/N) sum |V_i - Vt_i|^2 and the Osgood envelope built from
/// the KDE sup-norm estimates (||f + ft||_inf bounded by the sum of the two).
CoupledTrajectory simulate_coupled(const SimConfig& config, Ensemble first, Ensemble second,
                                   const CoupleOptions& options = {});

struct StabilityRow {
    double gap = 0.0;              ///< |c|
    double initial_w2_sq = 0.0;    ///< rho_hat(0)
    double sup_rho_hat = 0.0;
    double sup_w2_sq = 0.0;        ///< over the rows where W2 was computed
    double gamma_total = 0.0;      ///< int_0^T gamma
    double certificate = 0.0;      ///< m_inverse(M(rho_hat(0)) - gamma_total)
};

/// Coupled runs of f0 against f0 translated by gap * direction, one per gap, same seed.
std::vector<StabilityRow> stability_sequence(const SimConfig& config, const Ensemble& base, const Vec3& direction,
                                             const std::vector<double>& gaps, const CoupleOptions& options = {});

struct LinearOptions {
    bool drift_only = false;
    std::size_t record_every = 1;
};

struct LinearTrajectory {
    std::vector<double> times;
    std::vector<std::vector<Velocity>> positions;  ///< every recorded time, one entry per test particle
    std::size_t skipped_pairs = 0;
};

/// Test particles against a frozen background:
///   X += (dt/N) sum_j b_eps(X - V_j) + N^-1/2 sum_j sigma_eps(X - V_j) dB^{mj},
/// with independent increments per (test particle m, background particle j).
LinearTrajectory simulate_linear(const Ensemble& background, const std::vector<Velocity>& x0, const SimConfig& config,
                                 const LinearOptions& options = {});

}  // namespace lcl
