#include "tpp/thermal_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tpp/error.hpp"

namespace tpp {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << what << " must be strictly positive and finite (got " << v << ")";
        throw ValidationError(os.str());
    }
}

// Constant-power interval. `rise0` is the wire temperature rise at `start`.
struct Span {
    double start;
    double end;
    double target;  // steady-state rise for this interval's power
    double tau;
    double rise0;

    [[nodiscard]] double at(double t) const {
        const double elapsed = std::max(0.0, std::min(t, end) - start);
        return rise0 - (target - rise0) * std::expm1(-elapsed / tau);
    }
};

}  // namespace

ThermalModel::ThermalModel(KelvinPerWatt r, JoulesPerKelvin c, Seconds tau_heat, Seconds tau_cool, bool single,
                           const ActuatorGeometry& geometry, AmbientState ambient, ChainGains gains,
                           Kelvin failure_rise)
    : r_thermal_(r),
      heat_capacity_(c),
      tau_heat_(tau_heat),
      tau_cool_(tau_cool),
      single_tau_(single),
      geometry_(geometry),
      ambient_(ambient),
      gains_(gains),
      failure_rise_(failure_rise) {
    require_positive(r_thermal_.value(), "thermal resistance");
    require_positive(heat_capacity_.value(), "heat capacity");
    require_positive(tau_heat_.value(), "heating time constant");
    require_positive(tau_cool_.value(), "cooling time constant");
    require_positive(failure_rise_.value(), "failure temperature rise");
}

ThermalModel ThermalModel::single_tau(KelvinPerWatt r_thermal, JoulesPerKelvin heat_capacity,
                                      const ActuatorGeometry& geometry, AmbientState ambient, ChainGains gains,
                                      Kelvin failure_rise) {
    const Seconds tau = r_thermal * heat_capacity;
    return ThermalModel(r_thermal, heat_capacity, tau, tau, true, geometry, ambient, gains, failure_rise);
}

ThermalModel ThermalModel::dual_tau(KelvinPerWatt r_thermal, JoulesPerKelvin heat_capacity, Seconds tau_heat,
                                    Seconds tau_cool, const ActuatorGeometry& geometry, AmbientState ambient,
                                    ChainGains gains, Kelvin failure_rise) {
    return ThermalModel(r_thermal, heat_capacity, tau_heat, tau_cool, false, geometry, ambient, gains,
                        failure_rise);
}

ThermalModel ThermalModel::from_length_scaled(MeterKelvinPerWatt a, JoulesPerMeterKelvin b, Seconds tau_cool,
                                              const ActuatorGeometry& geometry, AmbientState ambient,
                                              ChainGains gains, Kelvin failure_rise) {
    const Meters wire = geometry.wire_length();
    return dual_tau(a / wire, b * wire, a * b, tau_cool, geometry, ambient, gains, failure_rise);
}

ThermalModel ThermalModel::with_gains(ChainGains gains) const {
    ThermalModel copy = *this;
    copy.gains_ = gains;
    return copy;
}

PulseSchedule::PulseSchedule(std::vector<PulseSegment> segments) : segments_(std::move(segments)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.start.value() >= 0.0) || !std::isfinite(s.start.value())) {
            throw ValidationError("pulse " + std::to_string(i) + " starts before t = 0");
        }
        if (!(s.duration.value() > 0.0) || !std::isfinite(s.duration.value())) {
            throw ValidationError("pulse " + std::to_string(i) + " has non-positive duration");
        }
        if (!(s.power.value() >= 0.0) || !std::isfinite(s.power.value())) {
            throw ValidationError("pulse " + std::to_string(i) + " has negative power");
        }
        if (i > 0 && s.start < segments_[i - 1].end()) {
            throw ValidationError("pulse " + std::to_string(i) + " overlaps or precedes pulse " +
                                  std::to_string(i - 1));
        }
    }
}

PulseSchedule PulseSchedule::train(Watts power, Hertz rate, double duty, std::size_t count, Seconds start) {
    require_positive(rate.value(), "pulse rate");
    if (!(duty > 0.0 && duty < 1.0)) {
        throw ValidationError("duty cycle must lie in (0, 1)");
    }
    const double period = 1.0 / rate.value();
    std::vector<PulseSegment> segments;
    segments.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        segments.push_back({start + Seconds(static_cast<double>(k) * period), Seconds(duty * period), power});
    }
    return PulseSchedule(std::move(segments));
}

Seconds PulseSchedule::end() const {
    return segments_.empty() ? Seconds(0.0) : segments_.back().end();
}

SimTrace::SimTrace(Seconds sample_period, std::vector<double> wire_rise_K, const ActuatorGeometry& geometry,
                   AmbientState ambient, ChainGains gains)
    : sample_period_(sample_period),
      wire_rise_(std::move(wire_rise_K)),
      geometry_(geometry),
      ambient_(ambient),
      gains_(gains) {
    require_positive(sample_period_.value(), "sample period");
}

double SimTrace::air_temperature_K(std::size_t i) const {
    return ambient_.temperature.value() + gains_.air_gain * wire_rise_[i];
}

double SimTrace::force_N(std::size_t i) const {
    return force_from_air_temp(Kelvin(air_temperature_K(i)), geometry_, ambient_).value();
}

double SimTrace::displacement_mm(std::size_t i) const {
    return to_millimeters(displacement_from_force(Newtons(force_N(i)), gains_));
}

std::vector<double> SimTrace::wire_temperature_C() const {
    std::vector<double> out(wire_rise_.size());
    const double offset = to_celsius(ambient_.temperature);
    std::transform(wire_rise_.begin(), wire_rise_.end(), out.begin(), [offset](double r) { return r + offset; });
    return out;
}

std::vector<double> SimTrace::air_temperature_K() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = air_temperature_K(i);
    return out;
}

std::vector<double> SimTrace::gauge_pressure_Pa() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out[i] = gauge_pressure(Newtons(force_N(i)), geometry_).value();
    }
    return out;
}

std::vector<double> SimTrace::force_N() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = force_N(i);
    return out;
}

std::vector<double> SimTrace::displacement_mm() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = displacement_mm(i);
    return out;
}

Kelvin step_response(const ThermalModel& model, Watts power, Seconds t) {
    if (!(t.value() >= 0.0)) {
        throw ValidationError("step response is defined for t >= 0");
    }
    const double target = (power * model.thermal_resistance()).value();
    if (std::isinf(t.value())) return Kelvin(target);
    return Kelvin(0.0 - target * std::expm1(-t.value() / model.tau_heat().value()));
}

SimTrace simulate(const ThermalModel& model, const PulseSchedule& schedule, Seconds t_end, Seconds sample_period) {
    require_positive(sample_period.value(), "sample period");
    if (!(t_end.value() >= 0.0) || !std::isfinite(t_end.value())) {
        throw ValidationError("simulation end time must be finite and non-negative");
    }
    if (t_end < schedule.end()) {
        throw ValidationError("simulation end time does not cover the pulse schedule");
    }

    const double dt = sample_period.value();
    const double r = model.thermal_resistance().value();
    const double tau_heat = model.tau_heat().value();
    const double tau_cool = model.tau_cool().value();
    constexpr double kForever = std::numeric_limits<double>::infinity();

    std::vector<Span> spans;
    spans.reserve(2 * schedule.segments().size() + 1);
    double cursor = 0.0;
    for (const auto& seg : schedule.segments()) {
        const double start = seg.start.value();
        if (start > cursor) spans.push_back({cursor, start, 0.0, tau_cool, 0.0});
        spans.push_back({start, seg.end().value(), seg.power.value() * r, tau_heat, 0.0});
        cursor = seg.end().value();
    }
    spans.push_back({cursor, kForever, 0.0, tau_cool, 0.0});

    const auto n = static_cast<std::size_t>(std::floor(t_end.value() / dt + 1e-9)) + 1;
    std::vector<double> rise(n);
    const double snap = 1e-9 * dt;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        while (t > spans[k].end + snap) {
            spans[k + 1].rise0 = spans[k].at(spans[k].end);
            ++k;
        }
        rise[i] = spans[k].at(t);
    }
    return SimTrace(sample_period, std::move(rise), model.geometry(), model.ambient(), model.gains());
}

Newtons peak_force(const ThermalModel& model, Watts power, Seconds pulse_duration) {
    require_positive(pulse_duration.value(), "pulse duration");
    if (power.value() == 0.0) return Newtons(0.0);
    const PulseSchedule single({{Seconds(0.0), pulse_duration, power}});
    const SimTrace trace = simulate(model, single, 2.0 * pulse_duration, pulse_duration / 200.0);
    double best = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) best = std::max(best, trace.force_N(i));
    return Newtons(best);
}

}  // namespace tpp
