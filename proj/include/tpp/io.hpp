#pragma once

// File formats shared by the command-line tool: failure-point CSV, parameter
// JSON, geometry descriptions and pattern documents.
//
// Pattern document:
//
//     {
//       "modules": [
//         {"id": 0, "kind": "quartet",
//          "channels": [{"channel": 0, "pin": 0, "geometry": "L8D6", "wire_resistance_ohm": 4.8}, ...]}
//       ],
//       "commands": [
//         {"channels": [0, 1], "rate_Hz": 20, "duty": 0.2, "duration_s": 0.5,
//          "power_W": 2.8, "start_s": 0.0}
//       ]
//     }
//
// A command gives either "power_W" or "voltage_V"; "start_s" defaults to 0.
// A geometry is a preset name, an `L<length>D<diameter>` tag (width 2 mm) or
// an object {"length_mm", "width_mm", "diameter_mm"}.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpp/core_physics.hpp"
#include "tpp/driver_sim.hpp"
#include "tpp/envelope.hpp"
#include "tpp/perception.hpp"

namespace tpp::io {

using Json = nlohmann::json;

inline constexpr double kDefaultCavityWidthMm = 2.0;

using GeometryPresets = std::map<std::string, ActuatorGeometry>;

/// L8D6, L4D4 and L10D8, the characterized configurations.
GeometryPresets default_geometry_presets();

/// Parses `L<length_mm>D<diameter_mm>`, e.g. "L8D6" or "L7.5D5".
ActuatorGeometry geometry_from_tag(const std::string& tag);
ActuatorGeometry parse_geometry(const Json& j, const GeometryPresets& presets);
Json geometry_to_json(const ActuatorGeometry& g);

/// CSV with header `rho_W_per_mm,t_p_ms,cavity_length_mm`; the last cell may be empty.
std::vector<FailurePoint> read_failure_points_csv(std::istream& in);
std::vector<FailurePoint> read_failure_points_csv_file(const std::string& path);
void write_failure_points_csv(std::ostream& out, const std::vector<FailurePoint>& points);

Json envelope_to_json(const EnvelopeFit& fit);
/// Reads {"a_mm_K_per_W", "b_uJ_per_mm_K", "T_fail_K"}; missing keys take the reference values.
EnvelopeFit envelope_from_json(const Json& j);

Json safety_to_json(const SafetyReport& r);

struct PatternDocument {
    std::vector<ModuleConfig> modules;
    std::vector<PatternCommand> commands;
};

PatternDocument parse_pattern(const Json& j, const GeometryPresets& presets);
Json pattern_to_json(const PatternDocument& doc);

Json board_report_to_json(const BoardReport& r);
Json ledger_to_json(const GateEventLog& log);

Json read_json_file(const std::string& path);
/// Pretty-printed with sorted keys and a trailing newline.
void write_json_file(const std::string& path, const Json& j);

/// Throws ValidationError naming `key` when it is missing or has the wrong type.
double require_number(const Json& j, const std::string& key);

}  // namespace tpp::io
