// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "tpp/calibration.hpp"
#include "tpp/core_physics.hpp"
#include "tpp/driver_sim.hpp"
#include "tpp/envelope.hpp"
#include "tpp/perception.hpp"
#include "tpp/thermal_sim.hpp"
#include "tpp/trace.hpp"
#include "tpp/trace_analysis.hpp"

using namespace tpp;
using namespace tpp::units::literals;
using tpp::test::rel_err;

namespace {

// Pinned tolerances.
constexpr double kAirTempTargetC = 97.0;
constexpr double kAirTempTolC = 1.0;
constexpr double kAsymptoteTarget = 0.2121;
constexpr double kAsymptoteTol = 1e-4;
constexpr double kMaxPulseTargetMs = 23.7;
constexpr double kMaxPulseTolMs = 0.2;
constexpr double kFitNoiselessTol = 1e-3;
constexpr double kFitNoisyTol = 0.05;
constexpr double kFitMedianR2 = 0.98;
constexpr double kCrossTol = 1e-9;
constexpr double kTauNoiselessTol = 0.005;
constexpr double kTauNoisyTol = 0.03;
constexpr double kTauR2 = 0.98;
constexpr double kSlopeLo = -1.15;
constexpr double kSlopeHi = -0.85;
constexpr double kHarmonicOverFloor = 10.0;
constexpr double kShuntTol = 1e-12;
constexpr double kPerceptionTol = 0.02;
constexpr double kInverseTol = 1e-12;
constexpr double kEnduranceTol = 0.01;

const ActuatorGeometry kL8D6 = ActuatorGeometry::from_mm(8, 2, 6);

ThermalModel reference_model(const ActuatorGeometry& g = kL8D6) {
    return ThermalModel::from_length_scaled(millimeter_kelvin_per_watt(6601), microjoules_per_millimeter_kelvin(6.51),
                                            110_ms, g);
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

Outcome ideal_gas() {
    const double c = to_celsius(air_temp_from_force(0.75_N, kL8D6, AmbientState{}));
    return {std::abs(c - kAirTempTargetC) <= kAirTempTolC, fmt("T_air = %.3f C", c)};
}

Outcome envelope_points() {
    const auto fit = EnvelopeFit::reference();
    const double asym = to_watts_per_millimeter(fit.asymptote());
    const auto tmax = max_pulse_duration(fit, watts_per_millimeter(0.5));
    const double tmax_ms = tmax ? to_milliseconds(*tmax) : -1.0;
    const bool endurance_safe = is_safe(fit, watts_per_millimeter(0.42), 19_ms).safe;
    const bool over_unsafe = !is_safe(fit, watts_per_millimeter(0.5), 30_ms).safe;
    const bool ok = std::abs(asym - kAsymptoteTarget) <= kAsymptoteTol &&
                    std::abs(tmax_ms - kMaxPulseTargetMs) <= kMaxPulseTolMs && endurance_safe && over_unsafe;
    return {ok, fmt("asymptote %.5f W/mm, max pulse at 0.5 W/mm %.3f ms, (0.42, 19 ms) %s, (0.5, 30 ms) %s", asym,
                    tmax_ms, endurance_safe ? "safe" : "UNSAFE", over_unsafe ? "unsafe" : "SAFE")};
}

std::vector<FailurePoint> synthetic_points(double a, double b, double noise, std::mt19937_64* rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<FailurePoint> pts;
    for (double tp_ms : {5.0, 10.0, 20.0, 40.0, 80.0}) {
        double rho = test::boundary_W_per_mm(a, b, 1400.0, tp_ms * 1e-3);
        if (rng != nullptr) rho *= 1.0 + noise * nd(*rng);
        pts.emplace_back(watts_per_millimeter(rho), milliseconds(tp_ms));
    }
    return pts;
}

Outcome envelope_fit_recovery() {
    const double a = 6601.0, b = 6.51;
    const auto clean = fit_envelope(synthetic_points(a, b, 0.0, nullptr));
    const double ea = rel_err(to_millimeter_kelvin_per_watt(clean.a), a);
    const double eb = rel_err(to_microjoules_per_millimeter_kelvin(clean.b), b);
    double worst = 0.0;
    std::vector<double> r2;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto rng = test::seeded(seed);
        const auto f = fit_envelope(synthetic_points(a, b, 0.01, &rng));
        worst = std::max({worst, rel_err(to_millimeter_kelvin_per_watt(f.a), a),
                          rel_err(to_microjoules_per_millimeter_kelvin(f.b), b)});
        r2.push_back(f.r_squared);
    }
    const double med = median(r2);
    return {ea <= kFitNoiselessTol && eb <= kFitNoiselessTol && worst <= kFitNoisyTol && med >= kFitMedianR2,
            fmt("noiseless err a %.2e b %.2e; 1%% noise worst err %.4f, median r2 %.5f", ea, eb, worst, med)};
}

Outcome cross_consistency() {
    const auto fit = EnvelopeFit::reference();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> len(2.0, 20.0), tp(0.5, 500.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto g = ActuatorGeometry::from_mm(len(rng), 2, 6);
        const auto m = reference_model(g);
        const Seconds t = milliseconds(tp(rng));
        // step_response is linear in power, so the failure power is T_fail over the unit-power rise.
        const double p_fail = m.failure_rise().value() / step_response(m, 1_W, t).value();
        const double p_env = boundary_rho(fit, t).value() * g.wire_length().value();
        worst = std::max(worst, rel_err(p_fail, p_env));
    }
    return {worst <= kCrossTol, fmt("worst relative difference %.2e over 20 draws", worst)};
}

Outcome cooling_fit() {
    const auto m = reference_model();
    const auto sim = simulate(m, PulseSchedule({{0_s, 75_ms, 4.8_W}}), 1.5_s, 1_ms);
    const std::vector<double>& rise = sim.wire_rise_K();
    std::vector<double> tail(rise.begin() + 75, rise.end());
    const TimeWindow window{0.0, 0.55};
    const auto clean = fit_tau(Trace(QuantityKind::temperature, "K", 1e-3, tail), window, 0.0);
    const double e0 = rel_err(clean.tau.value(), 0.110);
    double worst = 0.0, worst_r2 = 1.0;
    const double sigma = 0.02 * tail.front();
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto rng = test::seeded(seed);
        std::normal_distribution<double> nd(0.0, sigma);
        std::vector<double> noisy = tail;
        for (double& v : noisy) v += nd(rng);
        const auto f = fit_tau(Trace(QuantityKind::temperature, "K", 1e-3, noisy), window, 0.0);
        worst = std::max(worst, rel_err(f.tau.value(), 0.110));
        worst_r2 = std::min(worst_r2, f.r_squared);
    }
    return {e0 <= kTauNoiselessTol && worst <= kTauNoisyTol && worst_r2 >= kTauR2,
            fmt("noiseless tau %.4f ms (err %.2e); 2%% noise worst err %.4f, min r2 %.4f", clean.tau.value() * 1e3, e0,
                worst, worst_r2)};
}

Outcome fpp_scaling() {
    const auto m = reference_model();
    std::vector<double> rates{10, 20, 50, 100, 200}, fpp;
    for (double f : rates) {
        const auto settle = static_cast<std::size_t>(std::ceil(1.0 * f));  // one second
        const std::size_t periods = settle + 10;
        const double dt = 1.0 / (200.0 * f);
        const auto sim = simulate(m, PulseSchedule::train(4.8_W, Hertz(f), 0.1, periods),
                                  Seconds(static_cast<double>(periods) / f), Seconds(dt));
        const auto d = decompose_cyclic(Trace(QuantityKind::force, "N", dt, sim.force_N()), Hertz(f), settle);
        fpp.push_back(d.peak_to_peak);
    }
    const auto fit = linear_fit(rates, fpp, FitSpace::log_log);
    return {fit.slope >= kSlopeLo && fit.slope <= kSlopeHi,
            fmt("log-log slope %.4f (Fpp %.4g .. %.4g N)", fit.slope, fpp.front(), fpp.back())};
}

Outcome spectrum_peaks() {
    const auto m = reference_model();
    const auto sim = simulate(m, PulseSchedule::train(4.8_W, 25_Hz, 0.1, 100), 4_s, 0.5_ms);
    const Trace force(QuantityKind::force, "N", 0.5e-3, sim.force_N());
    const auto s = magnitude_spectrum(force.slice({2.0, 3.9995}), 12.5);
    std::size_t best = 1;
    for (std::size_t i = 1; i < s.magnitude.size(); ++i)
        if (s.magnitude[i] > s.magnitude[best]) best = i;
    std::vector<double> sorted(s.magnitude.begin() + 1, s.magnitude.end());
    std::sort(sorted.begin(), sorted.end());
    const double floor = sorted[sorted.size() / 2];
    const double h2 = s.magnitude[s.bin_of(50.0)] / floor;
    const double h3 = s.magnitude[s.bin_of(75.0)] / floor;
    return {best == s.bin_of(25.0) && h2 > kHarmonicOverFloor && h3 > kHarmonicOverFloor,
            fmt("largest peak at %.2f Hz; 50 Hz %.3g x floor, 75 Hz %.3g x floor", s.frequency_Hz[best], h2, h3)};
}

Outcome shunt_pipeline() {
    // Smooth quadratic resistivity law, tabulated every 100 C from 20 C. Linear
    // interpolation of a convex law in ratio is bounded by beta h^2 / 4, which
    // maps to at most beta h^2 / (4 alpha) in temperature.
    const double alpha = 9e-5, beta = 1e-8, h = 100.0;
    auto ratio = [&](double c) { return 1.0 + alpha * (c - 20.0) + beta * (c - 20.0) * (c - 20.0); };
    std::vector<ResistivityTable::Row> rows;
    for (double c = 20.0; c <= 1220.0; c += h) rows.push_back({c, ratio(c)});
    const ResistivityTable table(rows);
    const double bound = beta * h * h / (4.0 * alpha);

    const double r0 = 4.8, supply = 12.0, dt = 1e-4;
    std::vector<double> temp_c, wire, volts;
    for (int i = 0; i < 2000; ++i) {
        const double t = i * dt;
        const double c = t < 0.075 ? 20.0 + 1070.0 * (1.0 - std::exp(-t / 0.043)) / (1.0 - std::exp(-0.075 / 0.043))
                                   : 20.0 + 1070.0 * std::exp(-(t - 0.075) / 0.110);
        temp_c.push_back(c);
        wire.push_back(r0 * ratio(c));
        volts.push_back(test::shunt_voltage(supply, 0.22, 2.1, wire.back()));
    }
    const auto r = wire_resistance_trace(Trace(QuantityKind::shunt_voltage, "V", dt, volts), ShuntCircuit(Volts(supply)));
    double worst_r = 0.0;
    for (std::size_t i = 0; i < wire.size(); ++i) worst_r = std::max(worst_r, rel_err(r.samples()[i], wire[i]));
    const auto wt = wire_temp_from_resistance(r, table, 1);
    double worst_t = 0.0;
    for (std::size_t i = 0; i < temp_c.size(); ++i)
        worst_t = std::max(worst_t, std::abs(wt.temperature.samples()[i] - temp_c[i]));
    return {worst_r <= kShuntTol && worst_t <= bound && !wt.clamped,
            fmt("R_wire worst rel err %.2e; temperature worst err %.4f K (bound %.4f K)", worst_r, worst_t, bound)};
}

Outcome perception_round_trip() {
    const std::vector<double> levels{1.2, 2.4, 3.6, 4.8, 6.0};
    auto truth = [](double p) { return 0.2677 * p - 0.151; };
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> scale(0.2, 20.0);
    std::vector<MagnitudeRating> ratings;
    for (int j = 0; j < 12; ++j) {
        const double s = scale(rng);
        for (int rep = 0; rep < 5; ++rep)
            for (double p : levels) ratings.push_back({"P" + std::to_string(j), p, s * truth(p)});
    }
    // Normalization is scale free; the modulus fixes the scale to that of the generating line.
    double log_sum = 0.0;
    for (double p : levels) log_sum += std::log(truth(p));
    ReductionOptions opt;
    opt.modulus = std::exp(log_sum / static_cast<double>(levels.size()));
    const auto red = reduce_magnitude(MagnitudeDataset(ratings), opt);
    const auto model = fit_intensity_model(red.points);
    const double ea = rel_err(model.alpha_per_W, 0.2677), eb = rel_err(model.beta, -0.151);
    double worst_inv = 0.0;
    for (double target : {0.1, 0.3, 0.652, 1.0, 1.45}) {
        const Watts p = power_for_intensity(model, target);
        worst_inv = std::max(worst_inv, rel_err(model.intensity_for_power(p), target));
    }
    return {ea <= kPerceptionTol && eb <= kPerceptionTol && worst_inv <= kInverseTol,
            fmt("alpha %.5f (err %.2e), beta %.5f (err %.2e), inverse worst err %.2e", model.alpha_per_W, ea,
                model.beta, eb, worst_inv)};
}

Board forty_channels() {
    std::vector<ModuleConfig> mods;
    for (int m = 0; m < 10; ++m) {
        ModuleConfig mod{m, ModuleKind::quartet, {}};
        for (int p = 0; p < 4; ++p) mod.channels.push_back({4 * m + p, p, kL8D6, Ohms(4.8)});
        mods.push_back(mod);
    }
    return Board(mods);
}

Outcome scheduler() {
    const Board board = forty_channels();
    const auto fit = EnvelopeFit::reference();
    PatternCommand single;
    single.channels = {0};
    single.rate = 20_Hz;
    single.duty = 0.2;
    single.duration = 0.5_s;
    single.power = 2.8_W;
    const auto timing = command_timing(single);
    const auto one = compile_pattern(std::vector{single}, board, fit);
    bool pulses_ok = timing.count == 10 && timing.pulse_us == 10'000 && one.events.size() == 20;
    for (std::size_t k = 0; k < one.events.size(); k += 2) {
        const auto on = one.events[k], off = one.events[k + 1];
        pulses_ok = pulses_ok && on.on && !off.on && off.time_us - on.time_us == 10'000 &&
                    on.time_us == static_cast<std::int64_t>(k / 2) * 50'000;
    }
    const auto& led = one.ledger.at(0);
    const bool ledger_ok = led.pulses == 10 && led.on_time_us == 100'000 &&
                           led.energy_uJ == 2.8 * static_cast<double>(std::int64_t{10'000} * 10);

    PatternCommand all = single;
    all.channels.clear();
    for (int c = 0; c < 40; ++c) all.channels.push_back(c);
    std::vector<PatternCommand> cmds{all};
    const auto first = compile_pattern(cmds, board, fit);
    const auto second = compile_pattern(cmds, board, fit);
    const auto verification = verify_log(first, board, fit);
    std::ostringstream a, b;
    write_gate_log_csv(a, first);
    write_gate_log_csv(b, second);
    const bool repeat_ok = first == second && a.str() == b.str();
    return {pulses_ok && ledger_ok && verification.ok() && verification.pulses_checked == 400 && repeat_ok,
            fmt("count %lld x %lld us; ledger %.1f uJ; 40-channel pulses re-verified %zu, problems %zu; repeat %s",
                static_cast<long long>(timing.count), static_cast<long long>(timing.pulse_us), led.energy_uJ,
                verification.pulses_checked, verification.problems.size(), repeat_ok ? "identical" : "DIFFERS")};
}

Outcome endurance() {
    const auto m = reference_model();
    const Watts p(0.42 * to_millimeters(kL8D6.wire_length()));
    const std::size_t pulses = 54'000;
    const double f = 10.0;
    const auto sim = simulate(m, PulseSchedule::train(p, Hertz(f), 0.019 * f, pulses),
                              Seconds(static_cast<double>(pulses) / f), 1_ms);
    const auto stats = peak_stats(Trace(QuantityKind::force, "N", 1e-3, sim.force_N()), 90);
    const double dev = stats.max_relative_deviation();
    return {stats.peak_indices.size() == pulses && stats.groups.size() == 600 && dev < kEnduranceTol,
            fmt("%zu peaks, %zu groups, global mean %.5f N, max deviation %.4f%%", stats.peak_indices.size(),
                stats.groups.size(), stats.global_mean(), dev * 100.0)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"ideal-gas air temperature at 0.75 N", ideal_gas},
        {"envelope point checks", envelope_points},
        {"envelope fit recovery", envelope_fit_recovery},
        {"step response meets the failure boundary", cross_consistency},
        {"cooling time constant recovery", cooling_fit},
        {"Fpp rate scaling", fpp_scaling},
        {"25 Hz spectrum and harmonics", spectrum_peaks},
        {"shunt inversion pipeline", shunt_pipeline},
        {"perception round trip", perception_round_trip},
        {"scheduler determinism and exactness", scheduler},
        {"endurance statistics over 54000 pulses", endurance},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, run] : criteria) {
        ++n;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s  %2d  %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), secs);
    }
    std::printf("%d/%d criteria passed\n", n - failed, n);
    return failed == 0 ? 0 : 1;
}
