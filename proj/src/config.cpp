#include "lcl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>

namespace lcl {

namespace {

using nlohmann::json;

// Line of the first `"key":` in the text, 0 if not found.
std::size_t line_of_key(const std::string& text, const std::string& key) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t pos = 0;
    while ((pos = text.find(quoted, pos)) != std::string::npos) {
        std::size_t after = pos + quoted.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == ':') {
            return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
        }
        pos = after;
    }
    return 0;
}

struct Field {
    std::function<void(RunConfig&, const json&)> read;
    std::function<json(const RunConfig&)> write;
};

[[noreturn]] void type_error(const char* expected) { throw ConfigError(std::string("expected ") + expected); }

double as_real(const json& v) {
    if (!v.is_number()) type_error("a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) type_error("a finite number");
    return x;
}

std::uint64_t as_unsigned(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) type_error("a nonnegative integer");
    type_error("an integer");
}

int as_int(const json& v) {
    if (!v.is_number_integer()) type_error("an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -1000000000 || x > 1000000000) type_error("an integer of moderate size");
    return static_cast<int>(x);
}

bool as_bool(const json& v) {
    if (!v.is_boolean()) type_error("true or false");
    return v.get<bool>();
}

std::string as_string(const json& v) {
    if (!v.is_string()) type_error("a string");
    return v.get<std::string>();
}

Vec3 as_vec3(const json& v) {
    if (!v.is_array() || v.size() != 3) type_error("an array of 3 numbers");
    return Vec3(as_real(v[0]), as_real(v[1]), as_real(v[2]));
}

std::vector<double> as_reals(const json& v) {
    if (!v.is_array()) type_error("an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(as_real(x));
    return out;
}

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

template <class T>
Field real_field(T RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_real(v); }, [m](const RunConfig& c) { return json(c.*m); }};
}

Field size_field(std::size_t RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = static_cast<std::size_t>(as_unsigned(v)); },
            [m](const RunConfig& c) { return json(c.*m); }};
}

Field int_field(int RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_int(v); }, [m](const RunConfig& c) { return json(c.*m); }};
}

Field bool_field(bool RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_bool(v); }, [m](const RunConfig& c) { return json(c.*m); }};
}

Field string_field(std::string RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_string(v); },
            [m](const RunConfig& c) { return json(c.*m); }};
}

Field vec_field(Vec3 RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_vec3(v); },
            [m](const RunConfig& c) { return vec_json(c.*m); }};
}

Field reals_field(std::vector<double> RunConfig::*m) {
    return {[m](RunConfig& c, const json& v) { c.*m = as_reals(v); },
            [m](const RunConfig& c) { return json(c.*m); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        {"schema_version", int_field(&RunConfig::schema_version)},
        {"seed",
         {[](RunConfig& c, const json& v) { c.seed = as_unsigned(v); },
          [](const RunConfig& c) { return json(c.seed); }}},
        {"threads", int_field(&RunConfig::threads)},
        {"n", size_field(&RunConfig::n)},
        {"dt", real_field(&RunConfig::dt)},
        {"horizon", real_field(&RunConfig::horizon)},
        {"epsilon", real_field(&RunConfig::epsilon)},
        {"scheme", string_field(&RunConfig::scheme)},
        {"kde_bandwidth",
         {[](RunConfig& c, const json& v) {
              if (v.is_string()) {
                  if (v.get<std::string>() != "auto") type_error("\"auto\" or a positive number");
                  c.kde_bandwidth = 0.0;
                  return;
              }
              c.kde_bandwidth = as_real(v);
              if (!(c.kde_bandwidth > 0.0)) type_error("\"auto\" or a positive number");
          },
          [](const RunConfig& c) { return c.kde_bandwidth > 0.0 ? json(c.kde_bandwidth) : json("auto"); }}},
        {"record_every", size_field(&RunConfig::record_every)},
        {"kde", bool_field(&RunConfig::kde)},
        {"residuals", bool_field(&RunConfig::residuals)},
        {"initial", string_field(&RunConfig::initial)},
        {"initial_mean", vec_field(&RunConfig::initial_mean)},
        {"initial_variance", real_field(&RunConfig::initial_variance)},
        {"initial_variances", vec_field(&RunConfig::initial_variances)},
        {"initial_radius", real_field(&RunConfig::initial_radius)},
        {"initial_file", string_field(&RunConfig::initial_file)},
        {"second", string_field(&RunConfig::second)},
        {"shift", vec_field(&RunConfig::shift)},
        {"second_file", string_field(&RunConfig::second_file)},
        {"pair_initial", bool_field(&RunConfig::pair_initial)},
        {"w2_every", size_field(&RunConfig::w2_every)},
        {"osgood_constant", real_field(&RunConfig::osgood_constant)},
        {"gaps", reals_field(&RunConfig::gaps)},
        {"direction", vec_field(&RunConfig::direction)},
        {"identity_samples", size_field(&RunConfig::identity_samples)},
        {"lipschitz_pairs", size_field(&RunConfig::lipschitz_pairs)},
        {"r_min", real_field(&RunConfig::r_min)},
        {"r_max", real_field(&RunConfig::r_max)},
        {"identity_tolerance", real_field(&RunConfig::identity_tolerance)},
        {"sigma_constant", real_field(&RunConfig::sigma_constant)},
        {"b_constant", real_field(&RunConfig::b_constant)},
        {"norm_gap", real_field(&RunConfig::norm_gap)},
        {"mc_pairs", size_field(&RunConfig::mc_pairs)},
        {"separations", reals_field(&RunConfig::separations)},
        {"quadrature_level", int_field(&RunConfig::quadrature_level)},
        {"w2_method", string_field(&RunConfig::w2_method)},
        {"sinkhorn_reg", real_field(&RunConfig::sinkhorn_reg)},
        {"sinkhorn_iters", int_field(&RunConfig::sinkhorn_iters)},
        {"w2_first", string_field(&RunConfig::w2_first)},
        {"w2_second", string_field(&RunConfig::w2_second)},
    };
    return table;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config: " + key + ": " + what);
}

}  // namespace

SimConfig RunConfig::sim() const {
    SimConfig s;
    s.n = n;
    s.dt = dt;
    s.horizon = horizon;
    s.epsilon = epsilon;
    s.seed = seed;
    s.scheme = scheme == "tamed-euler" ? Scheme::tamed_euler : Scheme::euler_maruyama;
    s.kde_bandwidth = kde_bandwidth;
    s.record_every = record_every;
    s.kde = kde;
    s.keep_snapshots = residuals;
    s.threads = threads;
    return s;
}

void RunConfig::validate() const {
    if (schema_version != kConfigSchemaVersion) {
        bad("schema_version", "unsupported version " + std::to_string(schema_version) + ", expected " +
                                  std::to_string(kConfigSchemaVersion));
    }
    if (threads < 1) bad("threads", "must be at least 1");
    if (n < 1) bad("n", "must be at least 1");
    if (!(dt > 0.0)) bad("dt", "must be positive");
    if (!(horizon >= dt)) bad("horizon", "must be at least dt");
    if (!(epsilon >= 0.0)) bad("epsilon", "must be nonnegative");
    if (scheme != "euler-maruyama" && scheme != "tamed-euler") {
        bad("scheme", "expected \"euler-maruyama\" or \"tamed-euler\", got \"" + scheme + "\"");
    }
    if (epsilon == 0.0 && scheme != "tamed-euler") bad("epsilon", "0 requires scheme \"tamed-euler\"");
    if (kde_bandwidth < 0.0) bad("kde_bandwidth", "must be \"auto\" or positive");
    if (record_every < 1) bad("record_every", "must be at least 1");
    if (initial != "gaussian" && initial != "uniform-ball" && initial != "anisotropic" && initial != "file") {
        bad("initial", "unknown distribution kind \"" + initial + "\"");
    }
    if (!(initial_variance > 0.0)) bad("initial_variance", "must be positive");
    if (!(initial_variances.array() > 0.0).all()) bad("initial_variances", "entries must be positive");
    if (!(initial_radius > 0.0)) bad("initial_radius", "must be positive");
    if (initial == "file" && initial_file.empty()) bad("initial_file", "required when initial is \"file\"");
    if (second != "identical" && second != "translation" && second != "independent" && second != "file") {
        bad("second", "expected \"identical\", \"translation\", \"independent\" or \"file\", got \"" + second + "\"");
    }
    if (second == "file" && second_file.empty()) bad("second_file", "required when second is \"file\"");
    if (!(osgood_constant > 0.0)) bad("osgood_constant", "must be positive");
    if (gaps.empty()) bad("gaps", "must not be empty");
    for (double g : gaps) {
        if (!(g >= 0.0)) bad("gaps", "entries must be nonnegative");
    }
    if (direction.norm() == 0.0) bad("direction", "must be nonzero");
    if (!(r_min > 0.0) || !(r_max > r_min)) bad("r_min", "need 0 < r_min < r_max");
    if (!(identity_tolerance > 0.0)) bad("identity_tolerance", "must be positive");
    if (!(sigma_constant > 0.0)) bad("sigma_constant", "must be positive");
    if (!(b_constant > 0.0)) bad("b_constant", "must be positive");
    if (!(norm_gap >= 1.0)) bad("norm_gap", "must be at least 1");
    if (mc_pairs < 2) bad("mc_pairs", "must be at least 2");
    if (separations.empty()) bad("separations", "must not be empty");
    for (double s : separations) {
        if (!(s >= 0.0)) bad("separations", "entries must be nonnegative");
    }
    if (quadrature_level < 0 || quadrature_level > 3) bad("quadrature_level", "must be in [0, 3]");
    if (w2_method != "exact" && w2_method != "entropic") {
        bad("w2_method", "expected \"exact\" or \"entropic\", got \"" + w2_method + "\"");
    }
    if (!(sinkhorn_reg > 0.0)) bad("sinkhorn_reg", "must be positive");
    if (sinkhorn_iters < 1) bad("sinkhorn_iters", "must be at least 1");
}

nlohmann::json RunConfig::to_json() const {
    json out = json::object();
    for (const auto& [key, field] : fields()) out[key] = field.write(*this);
    return out;
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: line 1: top level must be a JSON object");
    auto where = [&](const std::string& key) {
        const std::size_t line = line_of_key(text, key);
        return line > 0 ? "config: line " + std::to_string(line) + ": " : std::string("config: ");
    };
    if (!doc.contains("schema_version")) throw ConfigError("config: line 1: missing key schema_version");
    RunConfig c;
    for (const auto& [key, value] : doc.items()) {
        const auto it = fields().find(key);
        if (it == fields().end()) throw ConfigError(where(key) + "unknown key \"" + key + "\"");
        try {
            it->second.read(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where(key) + key + ": " + e.what());
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + key + ": " + e.what());
        }
    }
    try {
        c.validate();
    } catch (const ConfigError& e) {
        // validate() names the key first: "config: key: message".
        const std::string msg = e.what();
        const std::string rest = msg.substr(std::string("config: ").size());
        const std::string key = rest.substr(0, rest.find(':'));
        throw ConfigError(where(key) + rest);
    }
    return c;
}

}  // namespace lcl
