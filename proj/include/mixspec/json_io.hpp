#pragma once

// JSON readers and writers for spectra, singular specs, reports and run configs.
// Readers reject unknown keys.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixspec/array_sim.hpp"
#include "mixspec/errors.hpp"
#include "mixspec/montecarlo.hpp"
#include "mixspec/signal_models.hpp"
#include "mixspec/spectra.hpp"
#include "mixspec/variance_theory.hpp"

namespace mixspec {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace io {

inline void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    expect_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline double number(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

inline std::uint64_t unsigned_or(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(where + "." + key + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::string string_field(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Wraps InvalidArgument from constructors so the location is reported.
template <class F>
auto located(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace io

inline Band band_from_json(const json& j, const std::string& where = "band") {
    io::check_keys(j, {"center", "bandwidth"}, where);
    return io::located(where, [&] { return Band(io::number(j, "center", where), io::number(j, "bandwidth", where)); });
}

inline json band_to_json(const Band& b) { return {{"center", b.center}, {"bandwidth", b.bandwidth}}; }

inline SpectralDensity density_from_json(const json& j, const std::string& where = "density") {
    io::check_keys(j, {"kind", "band", "power", "table"}, where);
    const std::string kind = io::string_field(j, "kind", where);
    const Band band = band_from_json(io::field(j, "band", where), where + ".band");
    if (kind == "flat") {
        if (j.contains("table")) throw ConfigError(where + ": 'table' is not valid for a flat density");
        return io::located(where, [&] { return flat_band_density(band, io::number(j, "power", where)); });
    }
    if (kind == "table") {
        if (j.contains("power")) throw ConfigError(where + ": 'power' is not valid for a tabulated density");
        const json& t = io::field(j, "table", where);
        if (!t.is_array()) throw ConfigError(where + ".table: expected an array of [freq, value] pairs");
        SpectralDensity::Table table;
        for (const auto& row : t) {
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
                throw ConfigError(where + ".table: expected [freq, value] pairs");
            table.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        return io::located(where, [&] { return table_density(band, table); });
    }
    throw ConfigError(where + ".kind: expected 'flat' or 'table'");
}

inline json density_to_json(const SpectralDensity& d) {
    json j{{"kind", d.tag()}, {"band", band_to_json(d.band())}};
    if (d.flat_level()) {
        j["power"] = *d.flat_level() * d.band().bandwidth;
    } else {
        json t = json::array();
        for (const auto& [f, v] : d.table()) t.push_back({f, v});
        j["table"] = t;
    }
    return j;
}

inline MixedSpectrum spectrum_from_json(const json& j, const std::string& where = "spectrum") {
    io::check_keys(j, {"density", "masses"}, where);
    std::optional<SpectralDensity> density;
    if (j.contains("density") && !j.at("density").is_null()) density = density_from_json(j.at("density"), where + ".density");
    std::vector<PointMass> masses;
    if (j.contains("masses")) {
        const json& m = j.at("masses");
        if (!m.is_array()) throw ConfigError(where + ".masses: expected an array");
        for (std::size_t i = 0; i < m.size(); ++i) {
            const std::string w = where + ".masses[" + std::to_string(i) + "]";
            io::check_keys(m[i], {"freq", "power", "kurtosis"}, w);
            masses.push_back({io::number(m[i], "freq", w), io::number_or(m[i], "power", 1.0, w),
                              io::number_or(m[i], "kurtosis", 2.0, w)});
        }
    }
    if (!density && masses.empty()) throw ConfigError(where + ": needs a density or at least one mass");
    return io::located(where, [&] { return MixedSpectrum(density, masses); });
}

inline json spectrum_to_json(const MixedSpectrum& s) {
    json j = json::object();
    if (s.density()) j["density"] = density_to_json(*s.density());
    json m = json::array();
    for (const auto& p : s.masses()) m.push_back({{"freq", p.freq}, {"power", p.power}, {"kurtosis", p.kurtosis}});
    j["masses"] = m;
    return j;
}

inline AmplitudeLaw law_from_json(const json& j, const std::string& where = "law") {
    if (j.is_string()) return law_from_json(json{{"kind", j.get<std::string>()}}, where);
    io::check_keys(j, {"kind", "kurtosis"}, where);
    const std::string kind = io::string_field(j, "kind", where);
    if (kind == "gaussian") return AmplitudeLaw::gaussian();
    if (kind == "fixed") return AmplitudeLaw::fixed_magnitude();
    if (kind == "two_point") return io::located(where, [&] { return AmplitudeLaw::two_point(io::number(j, "kurtosis", where)); });
    throw ConfigError(where + ".kind: expected 'gaussian', 'fixed' or 'two_point'");
}

inline json law_to_json(const AmplitudeLaw& l) {
    json j{{"kind", to_string(l.kind)}};
    if (l.kind == AmplitudeKind::two_point) j["kurtosis"] = l.kurtosis;
    return j;
}

/// {freqs: [...], powers: [...], law: {...}} or per-component "laws".
inline SingularProcessSpec singular_spec_from_json(const json& j, const std::string& where = "spec") {
    io::check_keys(j, {"freqs", "powers", "law", "laws"}, where);
    const auto f = io::number_list(j, "freqs", where);
    const auto p = io::number_list(j, "powers", where);
    std::vector<AmplitudeLaw> laws;
    if (j.contains("law") == j.contains("laws")) throw ConfigError(where + ": give exactly one of 'law' or 'laws'");
    if (j.contains("law")) {
        laws.assign(f.size(), law_from_json(j.at("law"), where + ".law"));
    } else {
        const json& l = j.at("laws");
        if (!l.is_array()) throw ConfigError(where + ".laws: expected an array");
        for (std::size_t i = 0; i < l.size(); ++i) laws.push_back(law_from_json(l[i], where + ".laws[" + std::to_string(i) + "]"));
    }
    return io::located(where, [&] { return SingularProcessSpec(f, p, laws); });
}

inline json singular_spec_to_json(const SingularProcessSpec& s) {
    json laws = json::array();
    for (const auto& l : s.laws) laws.push_back(law_to_json(l));
    return {{"freqs", s.freqs}, {"powers", s.powers}, {"laws", laws}};
}

inline json report_to_json(const VarianceReport& r) {
    return {{"finite_sample", r.finite_sample}, {"asymptotic_surrogate", r.asymptotic_surrogate}, {"limit", r.limit}, {"T", r.T}};
}

// ---------------------------------------------------------------------------------------------
// Run configs

inline void check_schema(const json& j, const std::string& command) {
    io::expect_object(j, "config");
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int>() != kSchemaVersion)
        throw ConfigError("config: schema_version must be " + std::to_string(kSchemaVersion));
    if (io::string_field(j, "command", "config") != command)
        throw ConfigError("config: command must be '" + command + "'");
}

struct TheoryConfig {
    Scenario scenario = Scenario::autocov;
    MixedSpectrum x;
    std::optional<MixedSpectrum> y;
    std::vector<double> T_grid;
};

inline Scenario scenario_from_string(const std::string& s, const std::string& where) {
    if (s == "autocov") return Scenario::autocov;
    if (s == "crosscov") return Scenario::crosscov;
    throw ConfigError(where + ": expected 'autocov' or 'crosscov'");
}

inline TheoryConfig theory_config_from_json(const json& j) {
    check_schema(j, "theory");
    io::check_keys(j, {"schema_version", "command", "description", "scenario", "x", "y", "T_grid"}, "config");
    TheoryConfig c;
    c.scenario = scenario_from_string(io::string_field(j, "scenario", "config"), "config.scenario");
    c.x = spectrum_from_json(io::field(j, "x", "config"), "config.x");
    if (c.scenario == Scenario::crosscov) c.y = spectrum_from_json(io::field(j, "y", "config"), "config.y");
    else if (j.contains("y")) throw ConfigError("config: 'y' is only valid for crosscov");
    c.T_grid = io::number_list(j, "T_grid", "config");
    if (c.T_grid.empty()) throw ConfigError("config.T_grid: must not be empty");
    for (double T : c.T_grid) io::located("config.T_grid", [&] { return Duration(T); });
    return c;
}

struct MonteCarloCase {
    std::string name;
    Campaign campaign;
};

struct MonteCarloConfig {
    std::uint64_t seed = 1;
    std::vector<MonteCarloCase> cases;
};

inline SurrogateOptions surrogate_from_json(const json& j, const std::string& where) {
    io::check_keys(j, {"oversample", "min_components"}, where);
    SurrogateOptions s;
    s.oversample = static_cast<std::int64_t>(io::unsigned_or(j, "oversample", 2, where));
    s.min_components = static_cast<std::int64_t>(io::unsigned_or(j, "min_components", 256, where));
    if (s.oversample < 1 || s.min_components < 1) throw ConfigError(where + ": sizes must be positive");
    return s;
}

inline std::string safe_name(const std::string& name, const std::string& where) {
    if (name.empty()) throw ConfigError(where + ": name must not be empty");
    for (char ch : name)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
            throw ConfigError(where + ": name may only contain letters, digits, '_' and '-'");
    return name;
}

inline MonteCarloConfig montecarlo_config_from_json(const json& j) {
    check_schema(j, "montecarlo");
    io::check_keys(j, {"schema_version", "command", "description", "seed", "cases"}, "config");
    MonteCarloConfig c;
    c.seed = io::unsigned_or(j, "seed", 1, "config");
    const json& cases = io::field(j, "cases", "config");
    if (!cases.is_array() || cases.empty()) throw ConfigError("config.cases: expected a nonempty array");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string w = "config.cases[" + std::to_string(i) + "]";
        const json& e = cases[i];
        io::check_keys(e, {"name", "scenario", "x", "y", "T_grid", "tau", "trials", "surrogate"}, w);
        MonteCarloCase mc;
        mc.name = safe_name(io::string_field(e, "name", w), w + ".name");
        Campaign& cp = mc.campaign;
        cp.scenario = scenario_from_string(io::string_field(e, "scenario", w), w + ".scenario");
        cp.x = spectrum_from_json(io::field(e, "x", w), w + ".x");
        if (cp.scenario == Scenario::crosscov) cp.y = spectrum_from_json(io::field(e, "y", w), w + ".y");
        else if (e.contains("y")) throw ConfigError(w + ": 'y' is only valid for crosscov");
        cp.T_grid = io::number_list(e, "T_grid", w);
        cp.tau = io::number_or(e, "tau", 0.0, w);
        cp.trials = static_cast<std::size_t>(io::unsigned_or(e, "trials", 2000, w));
        if (e.contains("surrogate")) cp.surrogate = surrogate_from_json(e.at("surrogate"), w + ".surrogate");
        cp.master_seed = c.seed;
        io::located(w, [&] { detail::validate_campaign(cp); return 0; });
        c.cases.push_back(std::move(mc));
    }
    return c;
}

struct ApproxConfig {
    std::optional<SpectralDensity> density;
    std::vector<AmplitudeLaw> laws;
    /// Sweep: fixed_n with a T grid, or fixed_T with a gamma grid.
    std::optional<ApproxRule> rule;
    std::vector<double> grid;  ///< T values (fixed_n) or gamma values (fixed_T)
    std::size_t trials = 0;
    std::uint64_t seed = 1;
    /// Factor surface over (n, T) for a bandwidth.
    std::optional<double> surface_bandwidth;
    std::vector<double> surface_n;
    std::vector<double> surface_T;
};

inline ApproxConfig approx_config_from_json(const json& j) {
    check_schema(j, "approx");
    io::check_keys(j, {"schema_version", "command", "description", "density", "laws", "sweep", "trials", "seed",
                       "factor_surface"},
                   "config");
    ApproxConfig c;
    c.seed = io::unsigned_or(j, "seed", 1, "config");
    c.trials = static_cast<std::size_t>(io::unsigned_or(j, "trials", 0, "config"));
    if (c.trials == 1) throw ConfigError("config.trials: Monte Carlo needs at least two trials");
    if (j.contains("laws")) {
        const json& l = j.at("laws");
        if (!l.is_array() || l.empty()) throw ConfigError("config.laws: expected a nonempty array");
        for (std::size_t i = 0; i < l.size(); ++i) c.laws.push_back(law_from_json(l[i], "config.laws[" + std::to_string(i) + "]"));
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        io::check_keys(s, {"rule", "n", "T", "T_grid", "gamma_grid"}, "config.sweep");
        const std::string rule = io::string_field(s, "rule", "config.sweep");
        ApproxRule r;
        if (rule == "fixed_n") {
            r.kind = ApproxRule::Kind::fixed_n;
            r.value = io::number(s, "n", "config.sweep");
            c.grid = io::number_list(s, "T_grid", "config.sweep");
            if (s.contains("gamma_grid") || s.contains("T")) throw ConfigError("config.sweep: fixed_n takes n and T_grid");
        } else if (rule == "fixed_T") {
            r.kind = ApproxRule::Kind::fixed_T;
            r.value = io::number(s, "T", "config.sweep");
            c.grid = io::number_list(s, "gamma_grid", "config.sweep");
            if (s.contains("T_grid") || s.contains("n")) throw ConfigError("config.sweep: fixed_T takes T and gamma_grid");
        } else {
            throw ConfigError("config.sweep.rule: expected 'fixed_n' or 'fixed_T'");
        }
        if (c.grid.empty()) throw ConfigError("config.sweep: grid must not be empty");
        if (!(r.value > 0.0)) throw ConfigError("config.sweep: rule value must be positive");
        if (r.kind == ApproxRule::Kind::fixed_n && r.value != std::floor(r.value))
            throw ConfigError("config.sweep.n: must be an integer");
        c.rule = r;
        c.density = density_from_json(io::field(j, "density", "config"), "config.density");
        if (c.laws.empty()) throw ConfigError("config: a sweep needs 'laws'");
    } else if (j.contains("density") || j.contains("trials")) {
        throw ConfigError("config: 'density' and 'trials' need a 'sweep'");
    }
    if (j.contains("factor_surface")) {
        const json& f = j.at("factor_surface");
        io::check_keys(f, {"bandwidth", "n_grid", "T_grid"}, "config.factor_surface");
        c.surface_bandwidth = io::number(f, "bandwidth", "config.factor_surface");
        c.surface_n = io::number_list(f, "n_grid", "config.factor_surface");
        c.surface_T = io::number_list(f, "T_grid", "config.factor_surface");
        if (!(*c.surface_bandwidth > 0.0) || c.surface_n.empty() || c.surface_T.empty())
            throw ConfigError("config.factor_surface: needs a positive bandwidth and nonempty grids");
        for (double n : c.surface_n)
            if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("config.factor_surface.n_grid: positive integers only");
        for (double T : c.surface_T)
            if (!(T > 0.0)) throw ConfigError("config.factor_surface.T_grid: positive values only");
    }
    if (!c.rule && !c.surface_bandwidth) throw ConfigError("config: needs a 'sweep' or a 'factor_surface'");
    return c;
}

inline DoaConfig doa_config_from_json(const json& j) {
    check_schema(j, "doa");
    io::check_keys(j, {"schema_version", "command", "description", "band", "angles_deg", "sensors", "snr_db", "T",
                       "snapshot_dt", "runs", "gamma_grid", "laws", "reference_oversample", "freq_points",
                       "angle_step_deg", "seed"},
                   "config");
    DoaConfig c;
    if (j.contains("band")) c.band = band_from_json(j.at("band"), "config.band");
    if (j.contains("angles_deg")) c.angles_deg = io::number_list(j, "angles_deg", "config");
    c.sensors = static_cast<int>(io::unsigned_or(j, "sensors", 10, "config"));
    c.snr_db = io::number_or(j, "snr_db", 10.0, "config");
    c.T = io::number_or(j, "T", 5e4, "config");
    c.snapshot_dt = io::number_or(j, "snapshot_dt", 1.0, "config");
    c.runs = static_cast<std::size_t>(io::unsigned_or(j, "runs", 50, "config"));
    if (j.contains("gamma_grid")) c.gamma_grid = io::number_list(j, "gamma_grid", "config");
    if (j.contains("laws")) {
        c.laws.clear();
        const json& l = j.at("laws");
        if (!l.is_array() || l.empty()) throw ConfigError("config.laws: expected a nonempty array");
        for (std::size_t i = 0; i < l.size(); ++i) c.laws.push_back(law_from_json(l[i], "config.laws[" + std::to_string(i) + "]"));
    }
    c.reference_oversample = static_cast<std::int64_t>(io::unsigned_or(j, "reference_oversample", 4, "config"));
    c.freq_points = static_cast<int>(io::unsigned_or(j, "freq_points", 32, "config"));
    c.angle_step_deg = io::number_or(j, "angle_step_deg", 0.5, "config");
    c.master_seed = io::unsigned_or(j, "seed", 1, "config");
    if (c.sensors < 2 || c.runs < 1 || c.reference_oversample < 1 || c.freq_points < 1 || !(c.T >= 1.0) ||
        !(c.snapshot_dt > 0.0) || !(c.angle_step_deg > 0.0 && c.angle_step_deg < 90.0) || c.gamma_grid.empty())
        throw ConfigError("config: invalid DoA parameters");
    for (double g : c.gamma_grid)
        if (!(g > 0.0)) throw ConfigError("config.gamma_grid: positive values only");
    for (double a : c.angles_deg)
        if (!(a > -90.0 && a < 90.0)) throw ConfigError("config.angles_deg: angles must lie in (-90, 90)");
    return c;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mixspec
