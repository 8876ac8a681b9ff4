#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "tpp/calibration.hpp"
#include "tpp/cli.hpp"
#include "tpp/driver_sim.hpp"
#include "tpp/error.hpp"
#include "tpp/perception.hpp"
#include "tpp/svg.hpp"
#include "tpp/trace.hpp"
#include "tpp/trace_analysis.hpp"

namespace tpp::cli {

namespace fs = std::filesystem;
using io::Json;

Seconds parse_duration(const std::string& text) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) throw ValidationError("cannot parse duration '" + text + "'");
    const std::string_view unit(ptr, static_cast<std::size_t>(end - ptr));
    double scale = 0.0;
    if (unit == "s") {
        scale = 1.0;
    } else if (unit == "ms") {
        scale = 1e-3;
    } else if (unit == "us") {
        scale = 1e-6;
    } else {
        throw ValidationError("duration '" + text + "' needs a unit suffix: us, ms or s");
    }
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("duration '" + text + "' must be non-negative");
    return Seconds(v * scale);
}

TimeWindow parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ValidationError("window '" + text + "' must be start:end");
    const double a = parse_duration(text.substr(0, colon)).value();
    const double b = parse_duration(text.substr(colon + 1)).value();
    if (!(b > a)) throw ValidationError("window '" + text + "' must end after it starts");
    return {a, b};
}

namespace {

struct Globals {
    std::string config_path;
    std::string out_dir;
    std::optional<double> margin;
    bool ack_margin = false;
};

/// State shared by every subcommand once options are parsed.
class Context {
public:
    Context(const Globals& g, std::ostream& out) : out_(out) {
        std::string path = g.config_path;
        if (path.empty()) {
            if (const char* env = std::getenv(kConfigEnvVar); env != nullptr) path = env;
        }
        config_ = path.empty() ? ProjectConfig{} : ProjectConfig::load(path);
        out_dir_ = g.out_dir.empty() ? config_.output_dir : g.out_dir;
        margin_ = config_.safety_margin;
        if (g.margin) {
            if (!g.ack_margin) {
                throw ValidationError("--margin changes the safety headroom; confirm with --ack-margin");
            }
            if (!(*g.margin >= 0.0 && *g.margin < 1.0)) throw ValidationError("--margin must lie in [0, 1)");
            margin_ = *g.margin;
        }
    }

    [[nodiscard]] const ProjectConfig& config() const { return config_; }
    [[nodiscard]] double margin() const { return margin_; }

    std::string path(const std::string& name) {
        fs::create_directories(out_dir_);
        files_.push_back(name);
        return (fs::path(out_dir_) / name).string();
    }

    /// Writes the report to `<name>.json` and to the output stream.
    void report(const std::string& name, Json j) {
        const std::string file = name + ".json";
        const std::string p = path(file);
        std::sort(files_.begin(), files_.end());
        j["files"] = files_;
        io::write_json_file(p, j);
        out_ << j.dump(2) << '\n';
    }

private:
    std::ostream& out_;
    ProjectConfig config_;
    std::string out_dir_;
    double margin_;
    std::vector<std::string> files_;
};

Json rejection_json(const SafetyReport& r, const EnvelopeFit& fit) {
    Json j = io::safety_to_json(r);
    if (const auto failure = max_pulse_duration(fit, r.rho)) j["failure_t_p_ms"] = to_milliseconds(*failure);
    return j;
}

void write_trace(Context& ctx, const std::string& name, const Trace& trace, const std::string& title) {
    write_trace_csv_file(ctx.path(name + ".csv"), trace);
    const std::string column = std::string(to_string(trace.kind())) + " [" + trace.unit() + "]";
    std::vector<double> t(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) t[i] = trace.time_at(i);
    svg::write_file(ctx.path(name + ".svg"), {title, "time [s]", column, false, false, {{column, t, trace.samples()}}});
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string geometry = "L8D6";
    std::optional<double> power;
    std::optional<double> rho;
    std::optional<double> voltage;
    std::optional<double> resistance;
    std::string tp;
    std::optional<double> rate;
    std::size_t count = 1;
    std::string dt;
    std::string t_end;
    bool allow_unsafe = false;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
    app.add_option("--geom", a.geometry, "geometry preset or L<len>D<diam> tag");
    auto* power = app.add_option("--power", a.power, "electrical power [W]");
    auto* rho = app.add_option("--rho", a.rho, "power per wire length [W/mm]");
    auto* voltage = app.add_option("--voltage", a.voltage, "drive voltage [V] (needs --resistance)");
    app.add_option("--resistance", a.resistance, "wire resistance [ohm]")->needs(voltage);
    power->excludes(rho)->excludes(voltage);
    rho->excludes(voltage);
    app.add_option("--tp", a.tp, "pulse duration, e.g. 75ms")->required();
    app.add_option("--rate", a.rate, "pulse rate [Hz] for a train");
    app.add_option("--count", a.count, "number of pulses");
    app.add_option("--dt", a.dt, "sample period (default t_p / 200)");
    app.add_option("--t-end", a.t_end, "simulated span (default: last pulse end + t_p)");
    app.add_flag("--allow-unsafe", a.allow_unsafe, "simulate even outside the envelope");
}

void cmd_simulate(Context& ctx, const SimulateArgs& a) {
    const auto& cfg = ctx.config();
    const ActuatorGeometry g = cfg.geometry(a.geometry);
    const Seconds tp = parse_duration(a.tp);
    if (!(tp.value() > 0.0)) throw ValidationError("--tp must be positive");
    Watts power(0.0);
    if (a.power) {
        power = Watts(*a.power);
    } else if (a.rho) {
        power = watts_per_millimeter(*a.rho) * g.wire_length();
    } else if (a.voltage) {
        if (!a.resistance) throw ValidationError("--voltage needs --resistance");
        power = electrical_power(ElectricalDrive(Volts(*a.voltage), Ohms(*a.resistance)));
    } else {
        throw ValidationError("give one of --power, --rho or --voltage");
    }
    const WattsPerMeter rho = power_per_length(power, g);
    const SafetyReport safety = is_safe(cfg.envelope, rho, tp, ctx.margin());
    if (!safety.safe && !a.allow_unsafe) {
        throw Rejection(describe_violation(cfg.envelope, safety), rejection_json(safety, cfg.envelope));
    }
    if (a.count == 0) throw ValidationError("--count must be at least 1");
    if (a.count > 1 && !a.rate) throw ValidationError("--count above 1 needs --rate");

    std::vector<PulseSegment> segments;
    for (std::size_t k = 0; k < a.count; ++k) {
        const Seconds start = a.rate ? Seconds(static_cast<double>(k) / *a.rate) : Seconds(0.0);
        segments.push_back({start, tp, power});
    }
    const PulseSchedule schedule(std::move(segments));
    const Seconds dt = a.dt.empty() ? tp / 200.0 : parse_duration(a.dt);
    const Seconds t_end = a.t_end.empty() ? schedule.end() + tp : parse_duration(a.t_end);

    const ThermalModel model = cfg.model_for(g);
    const SimTrace sim = simulate(model, schedule, t_end, dt);
    const double period = dt.value();
    const auto wire = sim.wire_temperature_C();
    const auto air = sim.air_temperature_K();
    const auto pressure = sim.gauge_pressure_Pa();
    const auto force = sim.force_N();
    const auto disp = sim.displacement_mm();
    write_trace(ctx, "simulate_wire_temperature", Trace(QuantityKind::temperature, "C", period, wire),
                "Wire temperature");
    write_trace(ctx, "simulate_air_temperature", Trace(QuantityKind::temperature, "K", period, air),
                "Air temperature");
    write_trace(ctx, "simulate_pressure", Trace(QuantityKind::pressure, "Pa", period, pressure), "Gauge pressure");
    write_trace(ctx, "simulate_force", Trace(QuantityKind::force, "N", period, force), "Isometric force");
    write_trace(ctx, "simulate_displacement", Trace(QuantityKind::displacement, "mm", period, disp),
                "Free displacement");

    Json j{{"command", "simulate"},
           {"geometry", io::geometry_to_json(g)},
           {"power_W", power.value()},
           {"rho_W_per_mm", to_watts_per_millimeter(rho)},
           {"t_p_ms", to_milliseconds(tp)},
           {"pulses", schedule.segments().size()},
           {"sample_period_ms", to_milliseconds(dt)},
           {"samples", sim.size()},
           {"peak_wire_rise_K", max_of(sim.wire_rise_K())},
           {"peak_wire_temperature_C", max_of(wire)},
           {"peak_air_temperature_C", max_of(air) - kZeroCelsiusInKelvin},
           {"peak_pressure_Pa", max_of(pressure)},
           {"peak_force_N", max_of(force)},
           {"peak_displacement_mm", max_of(disp)},
           {"safety", io::safety_to_json(safety)},
           {"unsafe_override", !safety.safe}};
    ctx.report("simulate_summary", j);
}

// ---------------------------------------------------------------- envelope

struct EnvelopeArgs {
    std::string tp_min = "1ms";
    std::string tp_max = "100ms";
    std::size_t points = 100;
    std::string points_file;
    std::optional<double> t_fail;
    std::optional<double> rho;
    std::optional<double> power;
    std::string geometry = "L8D6";
    std::string tp;
};

void cmd_envelope_sweep(Context& ctx, const EnvelopeArgs& a) {
    const auto& fit = ctx.config().envelope;
    const double lo = parse_duration(a.tp_min).value();
    const double hi = parse_duration(a.tp_max).value();
    if (!(lo > 0.0 && hi > lo)) throw ValidationError("need 0 < --tp-min < --tp-max");
    if (a.points < 2) throw ValidationError("--points must be at least 2");
    std::vector<double> t_ms, boundary, allowed;
    std::ofstream csv(ctx.path("envelope_boundary.csv"));
    csv << "t_p_ms,boundary_W_per_mm,allowed_W_per_mm\n";
    for (std::size_t i = 0; i < a.points; ++i) {
        // Log-spaced durations.
        const double t = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(a.points - 1));
        const double b = to_watts_per_millimeter(boundary_rho(fit, Seconds(t)));
        t_ms.push_back(t * 1e3);
        boundary.push_back(b);
        allowed.push_back((1.0 - ctx.margin()) * b);
        csv << format_double(t_ms.back()) << ',' << format_double(b) << ',' << format_double(allowed.back()) << '\n';
    }
    const double asym = to_watts_per_millimeter(fit.asymptote());
    csv << "inf," << format_double(asym) << ',' << format_double((1.0 - ctx.margin()) * asym) << '\n';
    svg::write_file(ctx.path("envelope_boundary.svg"),
                    {"Operating envelope", "t_p [ms]", "rho [W/mm]", true, true,
                     {{"failure boundary", t_ms, boundary}, {"allowed with margin", t_ms, allowed}}});
    ctx.report("envelope_sweep", {{"command", "envelope sweep"},
                                  {"envelope", io::envelope_to_json(fit)},
                                  {"margin", ctx.margin()},
                                  {"rows", a.points},
                                  {"asymptote_W_per_mm", asym}});
}

void cmd_envelope_fit(Context& ctx, const EnvelopeArgs& a) {
    const auto points = io::read_failure_points_csv_file(a.points_file);
    const Kelvin t_fail(a.t_fail.value_or(ctx.config().envelope.failure_rise.value()));
    const EnvelopeFit fit = fit_envelope(points, t_fail);
    std::vector<double> px, py;
    for (const auto& p : points) {
        px.push_back(to_milliseconds(p.pulse_duration));
        py.push_back(to_watts_per_millimeter(p.rho));
    }
    const double lo = *std::min_element(px.begin(), px.end());
    const double hi = *std::max_element(px.begin(), px.end());
    std::vector<double> cx, cy;
    for (int i = 0; i < 100; ++i) {
        const double t = lo * std::pow(hi / lo, i / 99.0);
        cx.push_back(t);
        cy.push_back(to_watts_per_millimeter(boundary_rho(fit, milliseconds(t))));
    }
    svg::Series measured{"failure points", px, py, true};
    svg::write_file(ctx.path("envelope_fit.svg"),
                    {"Envelope fit", "t_p [ms]", "rho [W/mm]", true, true, {measured, {"fitted boundary", cx, cy}}});
    Json env = io::envelope_to_json(fit);
    env["log_residuals"] = fit.log_residuals;
    env["points"] = points.size();
    ctx.report("envelope_fit", {{"command", "envelope fit"}, {"envelope", env}});
}

void cmd_envelope_check(Context& ctx, const EnvelopeArgs& a) {
    const auto& fit = ctx.config().envelope;
    const Seconds tp = parse_duration(a.tp);
    WattsPerMeter rho;
    Json j{{"command", "envelope check"}};
    if (a.rho) {
        rho = watts_per_millimeter(*a.rho);
    } else if (a.power) {
        const ActuatorGeometry g = ctx.config().geometry(a.geometry);
        rho = power_per_length(Watts(*a.power), g);
        j["geometry"] = io::geometry_to_json(g);
    } else {
        throw ValidationError("give --rho or --power");
    }
    const SafetyReport r = is_safe(fit, rho, tp, ctx.margin());
    j["safety"] = rejection_json(r, fit);
    if (!r.safe) j["message"] = describe_violation(fit, r);
    ctx.report("envelope_check", j);
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string trace;
    std::string window;
    std::optional<double> baseline;
    double supply_V = 0.0;
    double shunt_ohm = ShuntCircuit::kDefaultShuntOhm;
    double circuit_ohm = ShuntCircuit::kDefaultCircuitOhm;
    std::string table;
    std::size_t smoothing = kDefaultSmoothingWindow;
    double wire_C = 0.0;
    double air_C = 0.0;
    double force_N = 0.0;
    double displacement_mm = 0.0;
    std::string geometry = "L8D6";
};

void cmd_calibrate_tau(Context& ctx, const CalibrateArgs& a) {
    const Trace trace = read_trace_csv_file(a.trace);
    const TauFit fit = fit_tau(trace, parse_window(a.window), a.baseline);
    ctx.report("calibrate_tau", {{"command", "calibrate tau"},
                                 {"cooling",
                                  {{"tau_cool_ms", to_milliseconds(fit.tau)},
                                   {"amplitude", fit.amplitude},
                                   {"baseline", fit.baseline},
                                   {"r_squared", fit.r_squared},
                                   {"samples", fit.samples},
                                   {"unit", trace.unit()}}}});
}

void cmd_calibrate_wire(Context& ctx, const CalibrateArgs& a) {
    const Trace shunt = read_trace_csv_file(a.trace);
    const ShuntCircuit circuit(Volts(a.supply_V), Ohms(a.shunt_ohm), Ohms(a.circuit_ohm));
    const Trace resistance = wire_resistance_trace(shunt, circuit);
    write_trace(ctx, "wire_resistance", resistance, "Wire resistance");
    Json wire{{"R0_ohm", resistance.samples().front()}, {"peak_resistance_ohm", max_of(resistance.samples())}};
    std::string table_path = a.table;
    if (table_path.empty() && ctx.config().resistivity_table_path) table_path = *ctx.config().resistivity_table_path;
    if (!table_path.empty()) {
        const auto table = ResistivityTable::read_csv_file(table_path);
        const WireTemperature wt = wire_temp_from_resistance(resistance, table, a.smoothing);
        write_trace(ctx, "wire_temperature", wt.temperature, "Wire temperature");
        wire["peak_temperature_C"] = max_of(wt.temperature.samples());
        wire["clamped_samples"] = wt.clamped_samples.size();
        wire["smoothing_window"] = a.smoothing;
    }
    ctx.report("calibrate_wire", {{"command", "calibrate wire"}, {"wire", wire}});
}

void cmd_calibrate_gains(Context& ctx, const CalibrateArgs& a) {
    const ActuatorGeometry g = ctx.config().geometry(a.geometry);
    const PeakPoint point{celsius(a.wire_C), celsius(a.air_C), Newtons(a.force_N), millimeters(a.displacement_mm)};
    const GainCalibration cal = calibrate_gains(point, g, ctx.config().ambient);
    ctx.report("calibrate_gains", {{"command", "calibrate gains"},
                                   {"chain_gains",
                                    {{"air_gain", cal.air_gain},
                                     {"compliance_mm_per_N", to_millimeters_per_newton(cal.compliance)},
                                     {"ideal_gas_mismatch", cal.ideal_gas_mismatch},
                                     {"in_physical_range", cal.in_physical_range},
                                     {"consistent", cal.consistent},
                                     {"flags", cal.flags}}}});
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string trace;
    std::vector<std::string> traces;
    std::vector<double> rates;
    double rate = 0.0;
    std::size_t settle = 10;
    std::optional<double> cutoff;
    bool no_detrend = false;
    std::size_t group = 90;
    std::optional<double> prominence;
    std::string window;
};

void cmd_analyze_decompose(Context& ctx, const AnalyzeArgs& a) {
    const Trace trace = read_trace_csv_file(a.trace);
    const CyclicDecomposition d = decompose_cyclic(trace, Hertz(a.rate), a.settle);
    write_trace(ctx, "decompose_trace", trace, "Decomposed trace");
    ctx.report("analyze_decompose", {{"command", "analyze decompose"},
                                     {"unit", trace.unit()},
                                     {"F0", d.offset},
                                     {"Fpp", d.peak_to_peak},
                                     {"periods", d.periods},
                                     {"window_s", {d.window.start_s, d.window.end_s}}});
}

void cmd_analyze_spectrum(Context& ctx, const AnalyzeArgs& a) {
    const Trace trace = read_trace_csv_file(a.trace);
    double cutoff = 0.0;
    if (a.cutoff) {
        cutoff = *a.cutoff;
    } else if (a.rate > 0.0) {
        cutoff = a.rate / 2.0;
    }
    const Spectrum s = magnitude_spectrum(trace, SpectrumOptions{cutoff, !a.no_detrend});
    std::size_t peak = 1;
    for (std::size_t k = 1; k < s.magnitude.size(); ++k) {
        if (s.magnitude[k] > s.magnitude[peak]) peak = k;
    }
    std::ofstream csv(ctx.path("spectrum.csv"));
    csv << "frequency_Hz,magnitude\n";
    for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
        csv << format_double(s.frequency_Hz[k]) << ',' << format_double(s.magnitude[k]) << '\n';
    }
    svg::write_file(ctx.path("spectrum.svg"), {"Magnitude spectrum", "frequency [Hz]", "magnitude [" + trace.unit() + "]",
                                               false, false, {{"spectrum", s.frequency_Hz, s.magnitude}}});
    Json j{{"command", "analyze spectrum"},
           {"highpass_cutoff_Hz", cutoff},
           {"detrend", !a.no_detrend},
           {"bin_spacing_Hz", s.bin_spacing_Hz},
           {"bins", s.magnitude.size()},
           {"peak_frequency_Hz", s.frequency_Hz[peak]},
           {"peak_magnitude", s.magnitude[peak]}};
    if (a.rate > 0.0) {
        Json harmonics = Json::array();
        for (int h = 1; h <= 3; ++h) {
            const std::size_t k = s.bin_of(h * a.rate);
            harmonics.push_back({{"frequency_Hz", s.frequency_Hz[k]}, {"magnitude", s.magnitude[k]}});
        }
        j["harmonics"] = harmonics;
    }
    ctx.report("analyze_spectrum", j);
}

void cmd_analyze_endurance(Context& ctx, const AnalyzeArgs& a) {
    const Trace trace = read_trace_csv_file(a.trace);
    const PeakStats stats = peak_stats(trace, a.group, a.prominence);
    std::vector<double> gx, gy;
    Json groups = Json::array();
    for (const auto& g : stats.groups) {
        gx.push_back(static_cast<double>(g.index));
        gy.push_back(g.mean);
        groups.push_back(g.mean);
    }
    svg::write_file(ctx.path("endurance.svg"), {"Peak group means", "group", trace.unit(), false, false,
                                                {{"group mean", gx, gy, true}}});
    ctx.report("analyze_endurance", {{"command", "analyze endurance"},
                                     {"unit", trace.unit()},
                                     {"peaks", stats.peak_indices.size()},
                                     {"group_size", a.group},
                                     {"group_means", groups},
                                     {"ungrouped_peaks", stats.ungrouped},
                                     {"prominence_threshold", stats.prominence_threshold},
                                     {"global_mean", stats.global_mean()},
                                     {"max_relative_deviation", stats.max_relative_deviation()}});
}

void cmd_analyze_surface(Context& ctx, const AnalyzeArgs& a) {
    const Trace trace = read_trace_csv_file(a.trace).canonical();
    const Kelvin rise = surface_temp_stats(trace, parse_window(a.window));
    ctx.report("analyze_surface", {{"command", "analyze surface"}, {"max_rise_K", rise.value()}});
}

void cmd_analyze_fpp(Context& ctx, const AnalyzeArgs& a) {
    if (a.traces.size() != a.rates.size() || a.traces.size() < 2) {
        throw ValidationError("give at least two --trace files and one --rate per trace");
    }
    std::vector<double> f, fpp;
    Json rows = Json::array();
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        const Trace t = read_trace_csv_file(a.traces[i]);
        const auto d = decompose_cyclic(t, Hertz(a.rates[i]), a.settle);
        f.push_back(a.rates[i]);
        fpp.push_back(d.peak_to_peak);
        rows.push_back({{"rate_Hz", a.rates[i]}, {"F0", d.offset}, {"Fpp", d.peak_to_peak}});
    }
    const RegressionFit fit = linear_fit(f, fpp, FitSpace::log_log);
    std::vector<double> fx = f, fy;
    std::sort(fx.begin(), fx.end());
    for (double x : fx) fy.push_back(fit.predict(x));
    svg::write_file(ctx.path("fpp_scaling.svg"), {"Pulse-synchronous amplitude", "rate [Hz]", "Fpp", true, true,
                                                  {{"measured", f, fpp, true}, {"log-log fit", fx, fy}}});
    ctx.report("analyze_fpp", {{"command", "analyze fpp"},
                               {"rows", rows},
                               {"log_log_slope", fit.slope},
                               {"r_squared", fit.r_squared}});
}

// ---------------------------------------------------------------- schedule

struct ScheduleArgs {
    std::string pattern;
    bool simulate = false;
    std::string dt = "1ms";
};

void cmd_schedule(Context& ctx, const ScheduleArgs& a) {
    const auto& cfg = ctx.config();
    const io::PatternDocument doc = io::parse_pattern(io::read_json_file(a.pattern), cfg.geometries);
    const Board board(doc.modules);
    GateEventLog log;
    try {
        log = compile_pattern(doc.commands, board, cfg.envelope, ctx.margin());
    } catch (const SafetyError& e) {
        throw Rejection(e.what(), Json{{"margin", ctx.margin()}});
    }
    const LogVerification check = verify_log(log, board, cfg.envelope, ctx.margin());
    if (!check.ok()) throw std::logic_error("compiled log failed verification: " + check.problems.front());
    {
        std::ofstream csv(ctx.path("gate_log.csv"));
        write_gate_log_csv(csv, log);
    }
    Json j{{"command", "schedule"},
           {"events", log.events.size()},
           {"margin", ctx.margin()},
           {"board", io::board_report_to_json(board_report(log, board))},
           {"ledger", io::ledger_to_json(log)},
           {"verification", {{"ok", check.ok()}, {"pulses_checked", check.pulses_checked}}}};
    if (a.simulate) {
        std::map<int, ThermalModel> models;
        for (int id : board.channel_ids()) models.emplace(id, cfg.model_for(board.channel(id).geometry));
        const Seconds dt = parse_duration(a.dt);
        const auto traces = simulate_pattern(log, models, dt);
        Json peaks = Json::object();
        for (const auto& [ch, sim] : traces) {
            const std::string stem = "schedule_channel" + std::to_string(ch);
            const auto force = sim.force_N();
            write_trace_csv_file(ctx.path(stem + "_force.csv"), Trace(QuantityKind::force, "N", dt.value(), force));
            write_trace_csv_file(ctx.path(stem + "_wire_temperature.csv"),
                                 Trace(QuantityKind::temperature, "C", dt.value(), sim.wire_temperature_C()));
            peaks[std::to_string(ch)] = {{"peak_force_N", max_of(force)}, {"peak_wire_rise_K", max_of(sim.wire_rise_K())}};
        }
        j["simulation"] = peaks;
    }
    ctx.report("schedule_report", j);
}

// --------------------------------------------------------------- intensity

struct IntensityArgs {
    std::optional<double> target;
    std::optional<double> power;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::string model_file;
    std::string geometry = "L8D6";
    std::string tp = "10ms";
    std::string ratings;
    std::string zeros = "exclude";
    double epsilon = 1e-3;
    std::optional<double> modulus;
    std::string log;
};

IntensityModel model_from(const IntensityArgs& a) {
    IntensityModel m;
    if (!a.model_file.empty()) {
        const Json j = io::read_json_file(a.model_file);
        const Json& s = j.contains("intensity_model") ? j.at("intensity_model") : j;
        m.alpha_per_W = io::require_number(s, "alpha_per_W");
        m.beta = io::require_number(s, "beta");
        if (s.contains("r_squared")) m.r_squared = io::require_number(s, "r_squared");
    }
    if (a.alpha) m.alpha_per_W = *a.alpha;
    if (a.beta) m.beta = *a.beta;
    return m;
}

Json model_json(const IntensityModel& m) {
    return {{"alpha_per_W", m.alpha_per_W}, {"beta", m.beta}, {"r_squared", m.r_squared}};
}

void cmd_intensity_map(Context& ctx, const IntensityArgs& a) {
    const IntensityModel model = model_from(a);
    const DriveContext drive{ctx.config().geometry(a.geometry), parse_duration(a.tp), ctx.config().envelope,
                             ctx.margin()};
    IntensityDrive d = [&] {
        if (a.target.has_value() == a.power.has_value()) throw ValidationError("give exactly one of --target and --power");
        if (a.target) return power_for_intensity(model, *a.target, drive);
        return check_drive(Watts(*a.power), drive);
    }();
    Json j{{"command", "intensity map"},
           {"model", model_json(model)},
           {"geometry", io::geometry_to_json(drive.geometry)},
           {"power_W", d.power.value()},
           {"intensity", model.intensity_for_power(d.power)},
           {"rho_W_per_mm", to_watts_per_millimeter(d.rho)},
           {"max_safe_power_W", d.max_safe_power.value()},
           {"drivable", d.drivable()},
           {"safety", io::safety_to_json(d.safety)}};
    if (!d.drivable()) {
        j["message"] = describe_violation(drive.envelope, d.safety);
        throw Rejection("power " + format_double(d.power.value()) + " W exceeds the safe maximum " +
                            format_double(d.max_safe_power.value()) + " W at this pulse duration",
                        j);
    }
    ctx.report("intensity_map", j);
}

void cmd_intensity_fit(Context& ctx, const IntensityArgs& a) {
    const MagnitudeDataset data = MagnitudeDataset::read_csv_file(a.ratings);
    ReductionOptions opt;
    if (a.zeros == "epsilon") {
        opt.zeros = ZeroRatingPolicy::add_epsilon;
    } else if (a.zeros != "exclude") {
        throw ValidationError("--zeros must be 'exclude' or 'epsilon'");
    }
    opt.epsilon = a.epsilon;
    opt.modulus = a.modulus;
    const MagnitudeReduction red = reduce_magnitude(data, opt);
    const IntensityModel model = fit_intensity_model(red.points);
    std::vector<double> px, py, fy;
    Json points = Json::array();
    for (const auto& p : red.points) {
        px.push_back(p.power_W);
        py.push_back(p.intensity);
        fy.push_back(model.intensity_for_power(Watts(p.power_W)));
        points.push_back({{"power_W", p.power_W}, {"intensity", p.intensity}, {"ratings", p.count}});
    }
    svg::write_file(ctx.path("intensity_fit.svg"), {"Perceived intensity", "P_el [W]", "I", false, false,
                                                    {{"reduced", px, py, true}, {"fit", px, fy}}});
    Json gm = Json::object();
    for (const auto& [p, v] : red.participant_geometric_mean) gm[p] = v;
    ctx.report("intensity_fit", {{"command", "intensity fit"},
                                 {"intensity_model", model_json(model)},
                                 {"points", points},
                                 {"participant_geometric_mean", gm},
                                 {"zero_policy", a.zeros},
                                 {"modulus_scale", red.modulus_scale},
                                 {"averaging", MagnitudeReduction::kAveragingOrder}});
}

void cmd_intensity_localization(Context& ctx, const IntensityArgs& a) {
    const auto trials = read_localization_csv_file(a.log);
    const LocalizationStats s = localization_stats(trials);
    Json per = Json::object();
    for (const auto& [p, v] : s.participant_accuracy) per[p] = v;
    ctx.report("intensity_localization", {{"command", "intensity localization"},
                                          {"trials", s.trials},
                                          {"correct", s.correct},
                                          {"accuracy", s.accuracy},
                                          {"confusion", s.confusion},
                                          {"participant_accuracy", per}});
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message, const Json& details = {}) {
    Json j{{"error", kind}, {"message", message}};
    if (!details.is_null()) j["details"] = details;
    err << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Thermopneumatic actuator toolkit", "tpp"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "project config JSON (default: $TPP_CONFIG)");
    app.add_option("--out", g.out_dir, "output directory (overrides the config)");
    app.add_option("--margin", g.margin, "safety margin override in [0, 1)");
    app.add_flag("--ack-margin", g.ack_margin, "acknowledge a --margin override");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a pulse or pulse train");
    add_simulate(*simulate_cmd, sim);

    EnvelopeArgs env;
    auto* envelope_cmd = app.add_subcommand("envelope", "operating envelope tools");
    envelope_cmd->require_subcommand(1);
    auto* sweep = envelope_cmd->add_subcommand("sweep", "boundary table over a range of pulse durations");
    sweep->add_option("--tp-min", env.tp_min);
    sweep->add_option("--tp-max", env.tp_max);
    sweep->add_option("--points", env.points);
    auto* fit = envelope_cmd->add_subcommand("fit", "fit (a, b) to failure points");
    fit->add_option("--points", env.points_file, "failure-point CSV")->required();
    fit->add_option("--T-fail", env.t_fail, "failure temperature rise [K]");
    auto* check = envelope_cmd->add_subcommand("check", "classify one drive point");
    check->add_option("--rho", env.rho, "power per wire length [W/mm]");
    check->add_option("--power", env.power, "electrical power [W]");
    check->add_option("--geom", env.geometry);
    check->add_option("--tp", env.tp, "pulse duration")->required();

    CalibrateArgs cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "parameter extraction from traces");
    calibrate_cmd->require_subcommand(1);
    auto* tau = calibrate_cmd->add_subcommand("tau", "fit a cooling time constant");
    tau->add_option("--trace", cal.trace)->required();
    tau->add_option("--window", cal.window, "start:end, e.g. 75ms:600ms")->required();
    tau->add_option("--baseline", cal.baseline);
    auto* wire = calibrate_cmd->add_subcommand("wire", "shunt voltage to wire resistance and temperature");
    wire->add_option("--trace", cal.trace)->required();
    wire->add_option("--supply", cal.supply_V, "supply voltage [V]")->required();
    wire->add_option("--shunt-ohm", cal.shunt_ohm);
    wire->add_option("--circuit-ohm", cal.circuit_ohm);
    wire->add_option("--table", cal.table, "resistivity table CSV (default: config)");
    wire->add_option("--smoothing", cal.smoothing);
    auto* gains = calibrate_cmd->add_subcommand("gains", "chain gains from one characterization peak");
    gains->add_option("--wire-temp-C", cal.wire_C)->required();
    gains->add_option("--air-temp-C", cal.air_C)->required();
    gains->add_option("--force-N", cal.force_N)->required();
    gains->add_option("--displacement-mm", cal.displacement_mm)->required();
    gains->add_option("--geom", cal.geometry);

    AnalyzeArgs an;
    auto* analyze_cmd = app.add_subcommand("analyze", "trace analyses");
    analyze_cmd->require_subcommand(1);
    auto* decompose = analyze_cmd->add_subcommand("decompose", "offset and peak-to-peak under cyclic drive");
    decompose->add_option("--trace", an.trace)->required();
    decompose->add_option("--rate", an.rate, "drive rate [Hz]")->required();
    decompose->add_option("--settle", an.settle, "periods to skip");
    auto* spectrum = analyze_cmd->add_subcommand("spectrum", "magnitude spectrum");
    spectrum->add_option("--trace", an.trace)->required();
    spectrum->add_option("--rate", an.rate, "drive rate [Hz]; default cutoff is half of it");
    spectrum->add_option("--cutoff", an.cutoff, "high-pass cutoff [Hz]");
    spectrum->add_flag("--no-detrend", an.no_detrend);
    auto* endurance = analyze_cmd->add_subcommand("endurance", "grouped peak statistics");
    endurance->add_option("--trace", an.trace)->required();
    endurance->add_option("--group", an.group);
    endurance->add_option("--prominence", an.prominence);
    auto* surface = analyze_cmd->add_subcommand("surface", "maximum surface temperature rise");
    surface->add_option("--trace", an.trace)->required();
    surface->add_option("--window", an.window)->required();
    auto* fpp = analyze_cmd->add_subcommand("fpp", "peak-to-peak scaling across drive rates");
    fpp->add_option("--trace", an.traces)->required();
    fpp->add_option("--rate", an.rates)->required();
    fpp->add_option("--settle", an.settle);

    ScheduleArgs sch;
    auto* schedule_cmd = app.add_subcommand("schedule", "compile a pattern into gate events");
    schedule_cmd->add_option("--pattern", sch.pattern)->required();
    schedule_cmd->add_flag("--simulate", sch.simulate, "also simulate every channel");
    schedule_cmd->add_option("--dt", sch.dt, "simulation sample period");

    IntensityArgs in;
    auto* intensity_cmd = app.add_subcommand("intensity", "perceived intensity model");
    intensity_cmd->require_subcommand(1);
    auto* map = intensity_cmd->add_subcommand("map", "intensity to power (or back) with a safety check");
    map->add_option("--target", in.target, "target intensity");
    map->add_option("--power", in.power, "electrical power [W]");
    map->add_option("--alpha", in.alpha, "slope [1/W]");
    map->add_option("--beta", in.beta, "intercept");
    map->add_option("--model", in.model_file, "intensity model JSON");
    map->add_option("--geom", in.geometry);
    map->add_option("--tp", in.tp, "pulse duration");
    auto* ifit = intensity_cmd->add_subcommand("fit", "reduce magnitude ratings and fit the model");
    ifit->add_option("--ratings", in.ratings, "CSV participant,power_W,rating")->required();
    ifit->add_option("--zeros", in.zeros, "exclude | epsilon");
    ifit->add_option("--epsilon", in.epsilon);
    ifit->add_option("--modulus", in.modulus, "geometric mean of the reduced intensities");
    auto* loc = intensity_cmd->add_subcommand("localization", "localization accuracy and confusion matrix");
    loc->add_option("--log", in.log, "CSV participant,presented,reported")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        write_error(err, "usage", e.what());
        return kExitRejected;
    }

    try {
        Context ctx(g, out);
        if (simulate_cmd->parsed()) {
            cmd_simulate(ctx, sim);
        } else if (sweep->parsed()) {
            cmd_envelope_sweep(ctx, env);
        } else if (fit->parsed()) {
            cmd_envelope_fit(ctx, env);
        } else if (check->parsed()) {
            cmd_envelope_check(ctx, env);
        } else if (tau->parsed()) {
            cmd_calibrate_tau(ctx, cal);
        } else if (wire->parsed()) {
            cmd_calibrate_wire(ctx, cal);
        } else if (gains->parsed()) {
            cmd_calibrate_gains(ctx, cal);
        } else if (decompose->parsed()) {
            cmd_analyze_decompose(ctx, an);
        } else if (spectrum->parsed()) {
            cmd_analyze_spectrum(ctx, an);
        } else if (endurance->parsed()) {
            cmd_analyze_endurance(ctx, an);
        } else if (surface->parsed()) {
            cmd_analyze_surface(ctx, an);
        } else if (fpp->parsed()) {
            cmd_analyze_fpp(ctx, an);
        } else if (schedule_cmd->parsed()) {
            cmd_schedule(ctx, sch);
        } else if (map->parsed()) {
            cmd_intensity_map(ctx, in);
        } else if (ifit->parsed()) {
            cmd_intensity_fit(ctx, in);
        } else if (loc->parsed()) {
            cmd_intensity_localization(ctx, in);
        }
        return kExitOk;
    } catch (const Rejection& e) {
        write_error(err, "safety", e.what(), e.details());
    } catch (const SafetyError& e) {
        write_error(err, "safety", e.what());
    } catch (const ValidationError& e) {
        write_error(err, "validation", e.what());
    } catch (const FitError& e) {
        write_error(err, "fit", e.what());
    } catch (const nlohmann::json::exception& e) {
        write_error(err, "validation", e.what());
    } catch (const std::exception& e) {
        write_error(err, "internal", e.what());
        return kExitInternal;
    }
    return kExitRejected;
}

}  // namespace tpp::cli
