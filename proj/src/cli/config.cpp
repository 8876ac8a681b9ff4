#include <filesystem>
#include <set>

#include "tpp/cli.hpp"
#include "tpp/error.hpp"

namespace tpp::cli {

namespace {

namespace fs = std::filesystem;

void reject_unknown(const io::Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (allowed.count(key) == 0) throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

double number_or(const io::Json& j, const std::string& key, double fallback) {
    return j.contains(key) ? io::require_number(j, key) : fallback;
}

}  // namespace

ProjectConfig ProjectConfig::from_json(const io::Json& j, const std::string& base_dir) {
    reject_unknown(j,
                   {"ambient", "geometries", "thermal", "envelope", "resistivity_table_path", "safety_margin",
                    "output_dir"},
                   "config");
    ProjectConfig c;
    if (j.contains("ambient")) {
        const auto& a = j.at("ambient");
        reject_unknown(a, {"T0_K", "P0_Pa"}, "ambient");
        c.ambient = AmbientState(Kelvin(number_or(a, "T0_K", AmbientState::kDefaultTemperatureK)),
                                 Pascals(number_or(a, "P0_Pa", AmbientState::kDefaultPressurePa)));
    }
    if (j.contains("geometries")) {
        const auto& g = j.at("geometries");
        if (!g.is_object()) throw ValidationError("geometries must be an object of named geometries");
        for (const auto& [name, value] : g.items()) {
            c.geometries.insert_or_assign(name, io::parse_geometry(value, c.geometries));
        }
    }
    if (j.contains("thermal")) {
        const auto& t = j.at("thermal");
        reject_unknown(t, {"tau_cool_ms", "R_thermal_K_per_W", "tau_heat_ms", "air_gain", "compliance_mm_per_N"},
                       "thermal");
        c.thermal.tau_cool_ms = number_or(t, "tau_cool_ms", c.thermal.tau_cool_ms);
        if (t.contains("R_thermal_K_per_W")) c.thermal.r_thermal_K_per_W = io::require_number(t, "R_thermal_K_per_W");
        if (t.contains("tau_heat_ms")) c.thermal.tau_heat_ms = io::require_number(t, "tau_heat_ms");
        c.thermal.gains = ChainGains(number_or(t, "air_gain", ChainGains::kDefaultAirGain),
                                     millimeters_per_newton(number_or(t, "compliance_mm_per_N",
                                                                      ChainGains::kDefaultComplianceMmPerN)));
        if (c.thermal.tau_heat_ms && !c.thermal.r_thermal_K_per_W) {
            throw ValidationError("thermal.tau_heat_ms needs thermal.R_thermal_K_per_W");
        }
    }
    if (j.contains("envelope")) {
        reject_unknown(j.at("envelope"), {"a_mm_K_per_W", "b_uJ_per_mm_K", "T_fail_K"}, "envelope");
        c.envelope = io::envelope_from_json(j.at("envelope"));
    }
    if (j.contains("resistivity_table_path")) {
        fs::path p = j.at("resistivity_table_path").get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        if (!fs::exists(p)) throw ValidationError("resistivity table '" + p.string() + "' does not exist");
        c.resistivity_table_path = p.string();
    }
    c.safety_margin = number_or(j, "safety_margin", c.safety_margin);
    if (!(c.safety_margin >= 0.0 && c.safety_margin < 1.0)) throw ValidationError("safety_margin must lie in [0, 1)");
    if (j.contains("output_dir")) {
        fs::path p = j.at("output_dir").get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        c.output_dir = p.string();
    }
    // Build one model so thermal parameters are validated at load.
    (void)c.model_for(c.geometries.begin()->second);
    return c;
}

ProjectConfig ProjectConfig::load(const std::string& path) {
    const fs::path p(path);
    return from_json(io::read_json_file(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

ActuatorGeometry ProjectConfig::geometry(const std::string& name) const {
    return io::parse_geometry(io::Json(name), geometries);
}

ThermalModel ProjectConfig::model_for(const ActuatorGeometry& g) const {
    const Seconds tau_cool = milliseconds(thermal.tau_cool_ms);
    if (thermal.r_thermal_K_per_W) {
        const KelvinPerWatt r(*thermal.r_thermal_K_per_W);
        const Seconds tau_heat = thermal.tau_heat_ms ? milliseconds(*thermal.tau_heat_ms) : envelope.time_constant();
        return ThermalModel::dual_tau(r, tau_heat / r, tau_heat, tau_cool, g, ambient, thermal.gains,
                                      envelope.failure_rise);
    }
    return ThermalModel::from_length_scaled(envelope.a, envelope.b, tau_cool, g, ambient, thermal.gains,
                                            envelope.failure_rise);
}

}  // namespace tpp::cli
