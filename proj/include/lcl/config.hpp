#pragma once

#include "lcl/particle.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcl {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every run parameter, one flat JSON object. Keys not used by a subcommand are
/// still validated so a config file means the same thing everywhere.
struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 1;
    int threads = 1;

    // particle system
    std::size_t n = 1000;
    double dt = 1e-3;
    double horizon = 1.0;
    double epsilon = 0.1;
    std::string scheme = "euler-maruyama";  ///< or "tamed-euler"
    double kde_bandwidth = 0.0;             ///< 0 is "auto" (Silverman)
    std::size_t record_every = 10;
    bool kde = true;
    bool residuals = false;  ///< simulate: weak-form residuals between recorded rows

    // initial law: "gaussian", "uniform-ball", "anisotropic" or "file"
    std::string initial = "gaussian";
    Vec3 initial_mean = Vec3::Zero();
    double initial_variance = 1.0;
    Vec3 initial_variances = Vec3(2.0, 1.0, 1.0) * 0.75;  ///< energy 3
    double initial_radius = 1.0;
    std::string initial_file;

    // couple: second system "identical", "translation", "independent" or "file"
    std::string second = "translation";
    Vec3 shift = Vec3(0.1, 0.0, 0.0);
    std::string second_file;
    bool pair_initial = true;
    std::size_t w2_every = 10;
    double osgood_constant = 1.0;

    // stability
    std::vector<double> gaps = {0.2, 0.1, 0.05};
    Vec3 direction = Vec3(1.0, 0.0, 0.0);

    // check-kernels
    std::size_t identity_samples = 1000000;
    std::size_t lipschitz_pairs = 1000000;
    double r_min = 1e-3;
    double r_max = 1e3;
    double identity_tolerance = 1e-10;
    double sigma_constant = 25.0;
    double b_constant = 16.0;
    double norm_gap = 2.0;

    // oracles
    std::size_t mc_pairs = 200000;
    std::vector<double> separations = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    int quadrature_level = 0;

    // w2
    std::string w2_method = "exact";  ///< or "entropic"
    double sinkhorn_reg = 0.01;
    int sinkhorn_iters = 10000;
    std::string w2_first;   ///< snapshot files; positional arguments override
    std::string w2_second;

    SimConfig sim() const;
    /// Checks ranges and enumerations. Throws ConfigError naming the key.
    void validate() const;
    /// Every key with its value; parse_config of the result gives back *this.
    nlohmann::json to_json() const;
};

/// Parses the flat JSON text. Unknown keys, wrong types and bad values throw
/// ConfigError with the line of the offending key.
RunConfig parse_config(const std::string& text);

}  // namespace lcl
