#include "tpp/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>

#include "csv_util.hpp"
#include "tpp/error.hpp"
#include "tpp/trace.hpp"

namespace tpp::io {

namespace {

const Json& require(const Json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError("missing key '" + key + "'");
    return j.at(key);
}

int require_int(const Json& j, const std::string& key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer()) throw ValidationError("key '" + key + "' must be an integer");
    return v.get<int>();
}

double number_or(const Json& j, const std::string& key, double fallback) {
    return j.contains(key) ? require_number(j, key) : fallback;
}

}  // namespace

double require_number(const Json& j, const std::string& key) {
    const Json& v = require(j, key);
    if (!v.is_number()) throw ValidationError("key '" + key + "' must be a number");
    return v.get<double>();
}

GeometryPresets default_geometry_presets() {
    GeometryPresets p;
    for (const char* tag : {"L8D6", "L4D4", "L10D8"}) p.emplace(tag, geometry_from_tag(tag));
    return p;
}

ActuatorGeometry geometry_from_tag(const std::string& tag) {
    static const std::regex pattern(R"(L([0-9]+(?:\.[0-9]+)?)D([0-9]+(?:\.[0-9]+)?))");
    std::smatch m;
    if (!std::regex_match(tag, m, pattern)) {
        throw ValidationError("geometry '" + tag + "' is neither a preset nor an L<length>D<diameter> tag");
    }
    return ActuatorGeometry::from_mm(std::stod(m[1].str()), kDefaultCavityWidthMm, std::stod(m[2].str()));
}

ActuatorGeometry parse_geometry(const Json& j, const GeometryPresets& presets) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (auto it = presets.find(name); it != presets.end()) return it->second;
        return geometry_from_tag(name);
    }
    if (!j.is_object()) throw ValidationError("geometry must be a name or an object");
    return ActuatorGeometry::from_mm(require_number(j, "length_mm"), number_or(j, "width_mm", kDefaultCavityWidthMm),
                                     require_number(j, "diameter_mm"));
}

Json geometry_to_json(const ActuatorGeometry& g) {
    return Json{{"length_mm", to_millimeters(g.cavity_length())},
                {"width_mm", to_millimeters(g.cavity_width())},
                {"diameter_mm", to_millimeters(g.aperture_diameter())},
                {"wire_length_mm", to_millimeters(g.wire_length())}};
}

std::vector<FailurePoint> read_failure_points_csv(std::istream& in) {
    std::vector<FailurePoint> points;
    csv::for_each_row(in, {"rho_W_per_mm", "t_p_ms", "cavity_length_mm"}, [&](const auto& cells, std::size_t line) {
        std::optional<Meters> length;
        if (!cells[2].empty()) length = millimeters(csv::parse_double(cells[2], line));
        points.emplace_back(watts_per_millimeter(csv::parse_double(cells[0], line)),
                            milliseconds(csv::parse_double(cells[1], line)), length);
    });
    return points;
}

std::vector<FailurePoint> read_failure_points_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open failure-point file '" + path + "'");
    return read_failure_points_csv(in);
}

void write_failure_points_csv(std::ostream& out, const std::vector<FailurePoint>& points) {
    out << "rho_W_per_mm,t_p_ms,cavity_length_mm\n";
    for (const auto& p : points) {
        out << format_double(to_watts_per_millimeter(p.rho)) << ',' << format_double(to_milliseconds(p.pulse_duration))
            << ',';
        if (p.cavity_length) out << format_double(to_millimeters(*p.cavity_length));
        out << '\n';
    }
}

Json envelope_to_json(const EnvelopeFit& fit) {
    return Json{{"a_mm_K_per_W", to_millimeter_kelvin_per_watt(fit.a)},
                {"b_uJ_per_mm_K", to_microjoules_per_millimeter_kelvin(fit.b)},
                {"T_fail_K", fit.failure_rise.value()},
                {"tau_ms", to_milliseconds(fit.time_constant())},
                {"asymptote_W_per_mm", to_watts_per_millimeter(fit.asymptote())},
                {"r_squared", fit.r_squared}};
}

EnvelopeFit envelope_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("envelope parameters must be an object");
    return EnvelopeFit(millimeter_kelvin_per_watt(number_or(j, "a_mm_K_per_W", EnvelopeFit::kReferenceAMmKPerW)),
                       microjoules_per_millimeter_kelvin(number_or(j, "b_uJ_per_mm_K", EnvelopeFit::kReferenceBUjPerMmK)),
                       Kelvin(number_or(j, "T_fail_K", EnvelopeFit::kDefaultFailureRiseK)));
}

Json safety_to_json(const SafetyReport& r) {
    Json j{{"safe", r.safe},
           {"rho_W_per_mm", to_watts_per_millimeter(r.rho)},
           {"t_p_ms", to_milliseconds(r.pulse_duration)},
           {"margin", r.margin},
           {"boundary_W_per_mm", to_watts_per_millimeter(r.boundary)},
           {"allowed_W_per_mm", to_watts_per_millimeter(r.allowed)},
           {"headroom_ratio", r.headroom_ratio}};
    j["max_safe_t_p_ms"] = r.max_safe_pulse ? Json(to_milliseconds(*r.max_safe_pulse)) : Json(nullptr);
    return j;
}

PatternDocument parse_pattern(const Json& j, const GeometryPresets& presets) {
    PatternDocument doc;
    for (const Json& m : require(j, "modules")) {
        ModuleConfig mod{require_int(m, "id"), parse_module_kind(require(m, "kind").get<std::string>()), {}};
        for (const Json& c : require(m, "channels")) {
            mod.channels.push_back({require_int(c, "channel"), require_int(c, "pin"),
                                    parse_geometry(require(c, "geometry"), presets),
                                    Ohms(require_number(c, "wire_resistance_ohm"))});
        }
        doc.modules.push_back(std::move(mod));
    }
    if (j.contains("commands")) {
        for (const Json& c : j.at("commands")) {
            PatternCommand cmd;
            for (const Json& ch : require(c, "channels")) {
                if (!ch.is_number_integer()) throw ValidationError("command channels must be integers");
                cmd.channels.push_back(ch.get<int>());
            }
            cmd.rate = Hertz(require_number(c, "rate_Hz"));
            cmd.duty = require_number(c, "duty");
            cmd.duration = Seconds(require_number(c, "duration_s"));
            cmd.start = Seconds(number_or(c, "start_s", 0.0));
            if (c.contains("power_W")) cmd.power = Watts(require_number(c, "power_W"));
            if (c.contains("voltage_V")) cmd.voltage = Volts(require_number(c, "voltage_V"));
            doc.commands.push_back(std::move(cmd));
        }
    }
    return doc;
}

Json pattern_to_json(const PatternDocument& doc) {
    Json modules = Json::array();
    for (const auto& m : doc.modules) {
        Json channels = Json::array();
        for (const auto& c : m.channels) {
            channels.push_back({{"channel", c.channel},
                                {"pin", c.pin},
                                {"geometry", geometry_to_json(c.geometry)},
                                {"wire_resistance_ohm", c.wire_resistance.value()}});
        }
        modules.push_back({{"id", m.id}, {"kind", std::string(to_string(m.kind))}, {"channels", channels}});
    }
    Json commands = Json::array();
    for (const auto& c : doc.commands) {
        Json cmd{{"channels", c.channels},
                 {"rate_Hz", c.rate.value()},
                 {"duty", c.duty},
                 {"duration_s", c.duration.value()},
                 {"start_s", c.start.value()}};
        if (c.power) cmd["power_W"] = c.power->value();
        if (c.voltage) cmd["voltage_V"] = c.voltage->value();
        commands.push_back(cmd);
    }
    return Json{{"modules", modules}, {"commands", commands}};
}

Json board_report_to_json(const BoardReport& r) {
    Json modules = Json::object();
    for (const auto& [id, e] : r.module_energy_J) modules[std::to_string(id)] = e;
    return Json{{"peak_active_channels", r.peak_active_channels},
                {"peak_power_W", r.peak_power.value()},
                {"peak_power_time_us", r.peak_power_time_us},
                {"module_energy_J", modules},
                {"total_energy_J", r.total_energy_J}};
}

Json ledger_to_json(const GateEventLog& log) {
    Json j = Json::object();
    for (const auto& [ch, led] : log.ledger) {
        j[std::to_string(ch)] = {{"pulses", led.pulses},
                                 {"on_time_us", led.on_time_us},
                                 {"energy_uJ", led.energy_uJ},
                                 {"energy_J", led.energy_J()}};
    }
    return j;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace tpp::io
