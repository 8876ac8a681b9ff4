#pragma once

// The `tpp` command-line tool as a library, so tests can drive it in-process.
//
// Configuration is one JSON document; every key is optional and physical
// values carry their unit in the key name:
//
//     {
//       "ambient":   {"T0_K": 293.15, "P0_Pa": 101325},
//       "geometries": {"wide": {"length_mm": 8, "width_mm": 2, "diameter_mm": 8}},
//       "thermal":   {"tau_cool_ms": 110, "R_thermal_K_per_W": 450.0, "tau_heat_ms": 43,
//                     "air_gain": 0.072, "compliance_mm_per_N": 1.28},
//       "envelope":  {"a_mm_K_per_W": 6601, "b_uJ_per_mm_K": 6.51, "T_fail_K": 1400},
//       "resistivity_table_path": "data/resistivity.csv",
//       "safety_margin": 0.1,
//       "output_dir": "out"
//     }
//
// Without R_thermal_K_per_W the thermal model is derived from the envelope
// constants: R = a / L_T, C = b L_T. Relative paths resolve against the
// config file's directory. The path comes from --config, else from the
// TPP_CONFIG environment variable, else built-in defaults apply.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "tpp/core_physics.hpp"
#include "tpp/envelope.hpp"
#include "tpp/io.hpp"
#include "tpp/thermal_sim.hpp"
#include "tpp/trace.hpp"

namespace tpp::cli {

inline constexpr const char* kConfigEnvVar = "TPP_CONFIG";

enum ExitCode { kExitOk = 0, kExitInternal = 1, kExitRejected = 2 };

struct ThermalParams {
    double tau_cool_ms = ThermalModel::kDefaultTauCoolMs;
    std::optional<double> r_thermal_K_per_W;
    std::optional<double> tau_heat_ms;
    ChainGains gains;
};

struct ProjectConfig {
    AmbientState ambient;
    io::GeometryPresets geometries = io::default_geometry_presets();
    ThermalParams thermal;
    EnvelopeFit envelope = EnvelopeFit::reference();
    std::optional<std::string> resistivity_table_path;
    double safety_margin = kDefaultSafetyMargin;
    std::string output_dir = ".";

    /// Unknown keys are rejected. `base_dir` anchors relative paths.
    static ProjectConfig from_json(const io::Json& j, const std::string& base_dir);
    static ProjectConfig load(const std::string& path);

    [[nodiscard]] ActuatorGeometry geometry(const std::string& name) const;
    [[nodiscard]] ThermalModel model_for(const ActuatorGeometry& geometry) const;
};

/// A rejection that carries a structured report for the error JSON.
class Rejection : public std::runtime_error {
public:
    Rejection(const std::string& message, io::Json details)
        : std::runtime_error(message), details_(std::move(details)) {}
    [[nodiscard]] const io::Json& details() const { return details_; }

private:
    io::Json details_;
};

/// Parses a duration with a unit suffix: `75ms`, `0.5s`, `500us`.
Seconds parse_duration(const std::string& text);
/// `start:end`, each a duration.
TimeWindow parse_window(const std::string& text);

/// Runs the tool. Reports go to `out`; errors are written to `err` as JSON.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tpp::cli
