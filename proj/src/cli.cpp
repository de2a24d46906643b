#include "lcl/cli.hpp"

#include "lcl/config.hpp"
#include "lcl/io.hpp"
#include "lcl/oracles.hpp"
#include "lcl/osgood.hpp"
#include "lcl/transport.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef LCL_VERSION
#define LCL_VERSION "unknown"
#endif

namespace lcl::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Context {
    std::string subcommand;
    RunConfig config;
    fs::path out_dir;
    bool quiet = false;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    std::vector<std::string> outputs;
    json summary = json::object();
    std::vector<std::string> failures;

    void write(const std::string& name, const std::string& content) {
        io::write_atomic(out_dir / name, content);
        outputs.push_back(name);
    }
    void note(const std::string& text) const {
        if (!quiet) *err << text << '\n';
    }
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

Ensemble load_or_sample(const std::string& kind, const std::string& file, const RunConfig& c, std::uint64_t seed) {
    if (kind == "file") {
        auto samples = io::read_snapshot(file);
        if (samples.size() != c.n) {
            throw ConfigError("config: n: " + std::to_string(c.n) + " does not match the " +
                              std::to_string(samples.size()) + " velocities in " + file);
        }
        return init_ensemble(Source(std::move(samples)), c.n, seed);
    }
    if (kind == "gaussian") {
        return init_ensemble(Source(BoundedDensity::gaussian(c.initial_mean, c.initial_variance)), c.n, seed);
    }
    if (kind == "uniform-ball") {
        return init_ensemble(Source(BoundedDensity::uniform_ball(c.initial_mean, c.initial_radius)), c.n, seed);
    }
    return init_ensemble(Source(AnisotropicGaussian{c.initial_mean, c.initial_variances}), c.n, seed);
}

Ensemble first_ensemble(const RunConfig& c) { return load_or_sample(c.initial, c.initial_file, c, c.seed); }

// ---------------------------------------------------------------- check-kernels

void check_kernels(Context& ctx) {
    const RunConfig& c = ctx.config;
    ctx.note("identity sweep over " + std::to_string(c.identity_samples) + " points");
    const IdentitySweep id = identity_sweep(c.identity_samples, c.r_min, c.r_max, c.seed);
    ctx.note("Lipschitz sweep over " + std::to_string(c.lipschitz_pairs) + " pairs");
    const LipschitzSweep lip = lipschitz_sweep(c.lipschitz_pairs, c.r_min, c.r_max, c.seed, c.norm_gap);

    json report = {
        {"identities",
         {{"samples", id.samples},
          {"r_min", c.r_min},
          {"r_max", c.r_max},
          {"sigma_sigma_t_minus_a", id.sigma_sq_vs_a},
          {"a_times_z", id.a_times_z},
          {"trace", id.trace},
          {"eigenvalues", id.eigenvalues},
          {"oddness", id.oddness},
          {"symmetry", id.symmetry},
          {"energy", id.energy},
          {"homogeneity", id.homogeneity},
          {"max_error", id.max_error()},
          {"tolerance", c.identity_tolerance}}},
        {"lipschitz",
         {{"pairs", lip.pairs},
          {"max_sigma_ratio", lip.max_sigma_ratio},
          {"max_b_ratio", lip.max_b_ratio},
          {"sigma_constant", c.sigma_constant},
          {"b_constant", c.b_constant},
          {"norm_gap", c.norm_gap},
          {"branch_violations", lip.branch_violations}}},
    };
    ctx.expect(id.max_error() < c.identity_tolerance, "kernel identities exceed the tolerance");
    ctx.expect(lip.max_sigma_ratio <= c.sigma_constant, "sigma Lipschitz constant exceeded");
    ctx.expect(lip.max_b_ratio <= c.b_constant, "b Lipschitz constant exceeded");
    ctx.expect(lip.branch_violations == 0, "branch bounds violated");
    ctx.write("kernels.json", report.dump(2) + "\n");
    ctx.summary = {{"max_identity_error", id.max_error()},
                   {"max_sigma_ratio", lip.max_sigma_ratio},
                   {"max_b_ratio", lip.max_b_ratio}};
    if (!ctx.quiet) {
        *ctx.out << "max identity error " << io::format_real(id.max_error()) << "\n"
                 << "max sigma ratio " << io::format_real(lip.max_sigma_ratio) << "\n"
                 << "max b ratio " << io::format_real(lip.max_b_ratio) << "\n";
    }
}

// ---------------------------------------------------------------- oracles

void oracle_row(io::CsvWriter& w, const std::string& name, const std::string& parameter, double value, double lhs,
                double budget, double ratio, double stderr_, bool holds) {
    w.field(name).field(parameter).field(value).field(lhs).field(budget).field(ratio).field(stderr_).field(holds);
    w.end_row();
}

void run_oracles(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Vec3 origin = Vec3::Zero();
    const BoundedDensity ball = BoundedDensity::uniform_ball(origin, 1.0);
    const BoundedDensity gauss = BoundedDensity::gaussian(origin, 1.0);
    io::CsvWriter csv(io::kOracleColumns);
    json reports = json::array();
    auto add = [&](const oracles::Report& r, const std::string& parameter, double value) {
        reports.push_back(r.to_json());
        oracle_row(csv, r.name, parameter, value, r.lhs, r.budget, r.ratio, r.stderr_, r.holds);
        ctx.expect(r.holds, r.name + " fails at " + parameter + " = " + io::format_real(value));
    };

    ctx.note("moment bounds");
    const auto center = oracles::moment_bound(ball, -1.0, origin);
    add(center, "alpha", -1.0);
    for (double alpha : {-2.5, -2.0, -1.0, -0.5, 0.0}) add(oracles::moment_bound(gauss, alpha, origin), "alpha", alpha);
    for (double alpha : {-2.0, -1.0}) add(oracles::double_moment_bound(gauss, alpha, c.mc_pairs, c.seed), "alpha", alpha);
    for (double eps : {0.5, 0.1, 0.01}) {
        add(oracles::near_singularity_bound(ball, -1.0, eps, origin, Vec3(0.3, 0.0, 0.0)), "eps", eps);
        add(oracles::log_tail_bound(gauss, eps, origin), "eps", eps);
    }
    const auto scaling = oracles::near_singularity_scaling(ball, -1.0, origin);
    const auto growth = oracles::log_tail_growth(gauss, origin);

    ctx.note("coupled kernel quadrature");
    const Vec3 dir = c.direction.normalized();
    const auto sweep = oracles::coupled_kernel_sweep(gauss, origin, dir, c.separations, c.quadrature_level);
    json kernel_rows = json::array();
    for (std::size_t k = 0; k < sweep.fine.size(); ++k) {
        const auto& f = sweep.fine[k];
        const auto& co = sweep.coarse[k];
        const double bs = f.ratio_sigma > 0.0 ? f.lhs_sigma / f.ratio_sigma : 0.0;
        const double bb = f.ratio_b > 0.0 ? f.lhs_b / f.ratio_b : 0.0;
        const bool finite = std::isfinite(f.ratio_sigma) && std::isfinite(f.ratio_b);
        oracle_row(csv, "coupled_sigma", "separation", f.separation, f.lhs_sigma, bs, f.ratio_sigma, 0.0, finite);
        oracle_row(csv, "coupled_b", "separation", f.separation, f.lhs_b, bb, f.ratio_b, 0.0, finite);
        kernel_rows.push_back({{"separation", f.separation},
                               {"lhs_sigma", f.lhs_sigma},
                               {"lhs_b", f.lhs_b},
                               {"ratio_sigma", f.ratio_sigma},
                               {"ratio_b", f.ratio_b},
                               {"coarse_ratio_sigma", co.ratio_sigma},
                               {"coarse_ratio_b", co.ratio_b},
                               {"level", f.level}});
        ctx.expect(finite, "coupled kernel ratio not finite");
    }
    ctx.expect(sweep.max_refinement_change < 0.1, "coupled kernel ratios change by 10% or more under refinement");

    ctx.note("coupled drift Monte Carlo");
    json drift_rows = json::array();
    double drift_change = 0.0;
    for (double sep : c.separations) {
        const Vec3 shift = sep * dir;
        const BoundedDensity shifted = gauss.shifted(shift);
        const auto q = oracles::translation_coupling(gauss, shift, c.mc_pairs, stream_key({c.seed, 0x51}));
        const auto r = oracles::reflection_coupling(gauss, shift, c.mc_pairs, stream_key({c.seed, 0x52}));
        const auto one = oracles::coupled_drift_bound(gauss, shifted, q, r, c.mc_pairs, c.seed);
        const auto two = oracles::coupled_drift_bound(gauss, shifted, q, r, 2 * c.mc_pairs, c.seed);
        const bool finite = std::isfinite(two.ratio);
        if (two.ratio > 0.0) drift_change = std::max(drift_change, std::abs(two.ratio - one.ratio) / two.ratio);
        oracle_row(csv, "coupled_drift", "separation", sep, two.lhs, two.budget, two.ratio, two.stderr_, finite);
        drift_rows.push_back({{"separation", sep},
                              {"lhs", two.lhs},
                              {"stderr", two.stderr_},
                              {"q_cost", two.q_cost},
                              {"r_cost", two.r_cost},
                              {"budget", two.budget},
                              {"ratio", two.ratio},
                              {"ratio_half_sample", one.ratio},
                              {"pairs", two.pairs}});
        ctx.expect(finite, "coupled drift ratio not finite");
    }
    ctx.expect(drift_change < 0.1, "coupled drift ratios change by 10% or more under sample doubling");

    json report = {{"reports", reports},
                   {"ball_center_value", center.lhs},
                   {"near_singularity_scaling",
                    {{"alpha", -1.0}, {"slope", scaling.slope}, {"expected", 2.0}, {"r2", scaling.r2}}},
                   {"log_tail_growth", {{"slope", growth.slope}, {"r2", growth.r2}}},
                   {"coupled_kernel",
                    {{"rows", kernel_rows},
                     {"max_ratio_sigma", sweep.max_ratio_sigma},
                     {"max_ratio_b", sweep.max_ratio_b},
                     {"max_refinement_change", sweep.max_refinement_change}}},
                   {"coupled_drift", {{"rows", drift_rows}, {"max_doubling_change", drift_change}}}};
    ctx.expect(std::abs(scaling.slope - 2.0) <= 0.1, "near-singularity scaling exponent off");
    ctx.expect(growth.r2 > 0.99, "log growth fit R^2 at most 0.99");
    ctx.write("oracles.json", report.dump(2) + "\n");
    ctx.write("oracle_ratios.csv", csv.text());
    ctx.summary = {{"ball_center_value", center.lhs},
                   {"scaling_slope", scaling.slope},
                   {"log_tail_r2", growth.r2},
                   {"kernel_refinement_change", sweep.max_refinement_change},
                   {"drift_doubling_change", drift_change}};
    if (!ctx.quiet) {
        *ctx.out << "ball center value " << io::format_real(center.lhs) << "\n"
                 << "scaling slope " << io::format_real(scaling.slope) << "\n"
                 << "log tail r2 " << io::format_real(growth.r2) << "\n";
    }
}

// ---------------------------------------------------------------- simulate

void simulate_cmd(Context& ctx) {
    const RunConfig& c = ctx.config;
    const SimConfig sim = c.sim();
    Ensemble initial = first_ensemble(c);
    ctx.write("initial.csv", io::snapshot_csv(initial.velocities));
    ctx.note("simulating " + std::to_string(sim.n) + " particles for " + std::to_string(sim.steps()) + " steps");
    const Trajectory traj = simulate(sim, std::move(initial));
    ctx.write("trajectory.csv", io::trajectory_csv(traj.rows));
    ctx.write("final.csv", io::snapshot_csv(traj.final.velocities));
    if (c.residuals) {
        const auto battery = standard_battery();
        const auto res = weak_residual(traj.snapshots, battery, c.epsilon);
        ctx.write("residuals.csv", io::residual_csv(res));
    }
    const auto& last = traj.rows.back();
    ctx.summary = {{"final_energy", last.energy}, {"final_momentum", vec_json(last.momentum)}};
    if (!ctx.quiet) *ctx.out << "final energy " << io::format_real(last.energy) << "\n";
}

// ---------------------------------------------------------------- couple

Ensemble second_ensemble(const RunConfig& c, const Ensemble& first) {
    if (c.second == "identical") return first;
    if (c.second == "translation") {
        Ensemble e = first;
        for (auto& v : e.velocities) v += c.shift;
        return e;
    }
    if (c.second == "file") return load_or_sample("file", c.second_file, c, c.seed);
    return load_or_sample(c.initial, c.initial_file, c, stream_key({c.seed, 0x2}));
}

CoupleOptions couple_options(const RunConfig& c) {
    CoupleOptions o;
    o.pair_initial = c.pair_initial;
    o.w2_every = c.w2_every;
    o.osgood_constant = c.osgood_constant;
    return o;
}

void couple_cmd(Context& ctx) {
    const RunConfig& c = ctx.config;
    const SimConfig sim = c.sim();
    Ensemble first = first_ensemble(c);
    Ensemble second = second_ensemble(c, first);
    ctx.note("coupled run of " + std::to_string(sim.n) + " particle pairs for " + std::to_string(sim.steps()) +
             " steps");
    const CoupledTrajectory traj = simulate_coupled(sim, std::move(first), std::move(second), couple_options(c));
    ctx.write("trajectory_first.csv", io::trajectory_csv(traj.first));
    ctx.write("trajectory_second.csv", io::trajectory_csv(traj.second));
    ctx.write("envelope.csv", io::envelope_csv(traj.envelope));
    ctx.write("final_first.csv", io::snapshot_csv(traj.final.first.velocities));
    ctx.write("final_second.csv", io::snapshot_csv(traj.final.second.velocities));
    double sup_rho = 0.0;
    for (const auto& r : traj.envelope) sup_rho = std::max(sup_rho, r.rho_hat);
    ctx.summary = {{"initial_rho_hat", traj.envelope.front().rho_hat}, {"sup_rho_hat", sup_rho}};
    if (!ctx.quiet) {
        *ctx.out << "initial rho_hat " << io::format_real(traj.envelope.front().rho_hat) << "\n"
                 << "sup rho_hat " << io::format_real(sup_rho) << "\n";
    }
}

// ---------------------------------------------------------------- stability

void stability_cmd(Context& ctx) {
    const RunConfig& c = ctx.config;
    const SimConfig sim = c.sim();
    const Ensemble base = first_ensemble(c);
    ctx.note("stability sequence over " + std::to_string(c.gaps.size()) + " gaps");
    const auto rows = stability_sequence(sim, base, c.direction, c.gaps, couple_options(c));
    ctx.write("stability.csv", io::stability_csv(rows));
    json sup = json::array();
    for (const auto& r : rows) sup.push_back(r.sup_rho_hat);
    ctx.summary = {{"sup_rho_hat", sup}};
    if (!ctx.quiet) {
        for (const auto& r : rows) {
            *ctx.out << "gap " << io::format_real(r.gap) << " sup rho_hat " << io::format_real(r.sup_rho_hat) << "\n";
        }
    }
}

// ---------------------------------------------------------------- w2

void w2_cmd(Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.w2_first.empty() || c.w2_second.empty()) {
        throw ConfigError("w2: two snapshot files are required (positional arguments or w2_first, w2_second)");
    }
    const EmpiricalMeasure x(io::read_snapshot(c.w2_first));
    const EmpiricalMeasure y(io::read_snapshot(c.w2_second));
    if (x.size() != y.size()) {
        throw DomainError("w2: snapshot sizes differ (" + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()) + ")");
    }
    json report = {{"first", c.w2_first}, {"second", c.w2_second}, {"n", x.size()}, {"method", c.w2_method}};
    double distance = 0.0;
    if (c.w2_method == "exact") {
        const W2Result r = w2_exact(x, y);
        distance = r.distance;
        report["cost"] = r.plan.cost;
        report["pairing"] = r.plan.pairing;
    } else {
        const EntropicResult r = w2_entropic(x, y, c.sinkhorn_reg, c.sinkhorn_iters);
        distance = r.distance;
        report["cost"] = r.cost;
        report["converged"] = r.converged;
        report["iterations"] = r.iterations;
        report["marginal_error"] = r.marginal_error;
        report["reg"] = c.sinkhorn_reg;
    }
    report["distance"] = distance;
    ctx.write("w2.json", report.dump(2) + "\n");
    ctx.summary = {{"distance", distance}};
    *ctx.out << io::format_shortest(distance) << "\n";
}

// ---------------------------------------------------------------- driver

RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        RunConfig c;
        c.validate();
        return c;
    }
    std::string text = io::read_file(path);
    // A run manifest is accepted in place of a config: its echo is re-validated.
    try {
        const json doc = json::parse(text);
        if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) {
            text = doc["config"].dump(2);
        }
    } catch (const json::parse_error&) {
        // parse_config reports the error with its position
    }
    return parse_config(text);
}

int threads_from_env() {
    const char* env = std::getenv("LCL_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("LCL_THREADS: expected a positive integer, got \"" +
                                                              std::string(env) + "\"");
    return static_cast<int>(v);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Landau-Coulomb particle laboratory", "lcl"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool quiet = false;
    app.add_option("--config", config_path, "flat JSON config (or a run manifest)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--threads", threads, "worker threads (fallback: LCL_THREADS)")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "no progress output");

    app.add_subcommand("check-kernels", "kernel identities and Lipschitz sweep");
    app.add_subcommand("oracles", "integral inequality witnesses");
    app.add_subcommand("simulate", "single particle system");
    app.add_subcommand("couple", "two systems with shared noise and the Osgood envelope");
    app.add_subcommand("stability", "coupled runs over shrinking initial gaps");
    auto* w2 = app.add_subcommand("w2", "W2 distance between two snapshot files");
    std::vector<std::string> files;
    w2->add_option("files", files, "two snapshot CSV files (vx,vy,vz)")->expected(0, 2);

    for (std::size_t k = 0; k < args.size(); ++k) {
        const std::string& a = args[k];
        if (a == "--config" || a == "--out" || a == "--seed" || a == "--threads") {
            ++k;  // its value
            continue;
        }
        if (a.empty() || a[0] == '-') continue;
        if (app.get_subcommand_no_throw(a) == nullptr) {
            err << "lcl: unknown subcommand \"" << a << "\"\n";
            return kValidationError;
        }
        break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "lcl: " << e.what() << "\n";
        return kValidationError;
    }

    Context ctx;
    ctx.subcommand = app.get_subcommands().front()->get_name();
    ctx.out_dir = out_dir;
    ctx.quiet = quiet;
    ctx.out = &out;
    ctx.err = &err;
    const std::string start = utc_now();
    int code = kOk;
    std::string message;
    json failure = nullptr;
    try {
        ctx.config = load_config(config_path);
        if (seed) ctx.config.seed = *seed;
        if (threads) {
            ctx.config.threads = *threads;
        } else if (const int env = threads_from_env(); env > 0) {
            ctx.config.threads = env;
        }
        if (ctx.subcommand == "w2") {
            if (files.size() == 1) throw ConfigError("w2: expected two snapshot files, got one");
            if (files.size() == 2) {
                ctx.config.w2_first = files[0];
                ctx.config.w2_second = files[1];
            }
        }
        ctx.config.validate();
        fs::create_directories(ctx.out_dir);

        if (ctx.subcommand == "check-kernels") check_kernels(ctx);
        else if (ctx.subcommand == "oracles") run_oracles(ctx);
        else if (ctx.subcommand == "simulate") simulate_cmd(ctx);
        else if (ctx.subcommand == "couple") couple_cmd(ctx);
        else if (ctx.subcommand == "stability") stability_cmd(ctx);
        else w2_cmd(ctx);

        if (!ctx.failures.empty()) {
            code = kAssertionFailure;
            for (const auto& f : ctx.failures) err << "lcl: check failed: " << f << "\n";
        }
    } catch (const NumericalFailure& e) {
        code = kNumericalFailure;
        message = e.what();
        failure = {{"step", e.step}, {"min_pair_distance", e.min_pair_distance}, {"max_drift", e.max_drift}};
    } catch (const oracles::MarginalMismatch& e) {
        code = kAssertionFailure;
        message = e.what();
    } catch (const ConfigError& e) {
        code = kValidationError;
        message = e.what();
    } catch (const io::IoError& e) {
        code = kValidationError;
        message = e.what();
    } catch (const std::domain_error& e) {
        code = kValidationError;
        message = e.what();
    } catch (const fs::filesystem_error& e) {
        code = kValidationError;
        message = e.what();
    }
    if (!message.empty()) err << "lcl: " << message << "\n";

    // No manifest for runs that never got a valid config.
    if (code != kValidationError) {
        json manifest = {{"manifest_version", 1},
                         {"subcommand", ctx.subcommand},
                         {"config", ctx.config.to_json()},
                         {"seed", ctx.config.seed},
                         {"start", start},
                         {"end", utc_now()},
                         {"code_version", LCL_VERSION},
                         {"outputs", ctx.outputs},
                         {"exit_code", code},
                         {"summary", ctx.summary},
                         {"failed_checks", ctx.failures}};
        if (!message.empty()) manifest["error"] = message;
        if (!failure.is_null()) manifest["numerical_failure"] = failure;
        try {
            io::write_atomic(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
        } catch (const io::IoError& e) {
            err << "lcl: " << e.what() << "\n";
            return kValidationError;
        }
    }
    return code;
}

}  // namespace lcl::cli
