#pragma once

// First-order lumped thermal model of the heating wire, driven by piecewise
// constant power, and the memoryless chain down to air temperature, cavity
// pressure, membrane force and free displacement.

#include <cstddef>
#include <vector>

#include "tpp/core_physics.hpp"
#include "tpp/units.hpp"

namespace tpp {

class ThermalModel {
public:
    static constexpr double kDefaultTauHeatMs = 43.0;
    static constexpr double kDefaultTauCoolMs = 110.0;
    static constexpr double kDefaultFailureRiseK = 1400.0;

    /// Strict single-time-constant model: tau = R_thermal * C for heating and cooling.
    static ThermalModel single_tau(KelvinPerWatt r_thermal, JoulesPerKelvin heat_capacity,
                                   const ActuatorGeometry& geometry, AmbientState ambient = {},
                                   ChainGains gains = {}, Kelvin failure_rise = Kelvin(kDefaultFailureRiseK));

    /// Separate heating and cooling constants. R_thermal * C is not tied to either.
    static ThermalModel dual_tau(KelvinPerWatt r_thermal, JoulesPerKelvin heat_capacity, Seconds tau_heat,
                                 Seconds tau_cool, const ActuatorGeometry& geometry, AmbientState ambient = {},
                                 ChainGains gains = {}, Kelvin failure_rise = Kelvin(kDefaultFailureRiseK));

    /// Model from length-scaled wire constants: R_thermal = a / L_T, C = b L_T,
    /// tau_heat = a b, with an independently measured cooling constant.
    static ThermalModel from_length_scaled(MeterKelvinPerWatt a, JoulesPerMeterKelvin b, Seconds tau_cool,
                                           const ActuatorGeometry& geometry, AmbientState ambient = {},
                                           ChainGains gains = {},
                                           Kelvin failure_rise = Kelvin(kDefaultFailureRiseK));

    [[nodiscard]] KelvinPerWatt thermal_resistance() const { return r_thermal_; }
    [[nodiscard]] JoulesPerKelvin heat_capacity() const { return heat_capacity_; }
    [[nodiscard]] Seconds tau_heat() const { return tau_heat_; }
    [[nodiscard]] Seconds tau_cool() const { return tau_cool_; }
    [[nodiscard]] bool is_single_tau() const { return single_tau_; }
    /// Wire temperature rise over ambient at which the wire fails.
    [[nodiscard]] Kelvin failure_rise() const { return failure_rise_; }
    [[nodiscard]] const ActuatorGeometry& geometry() const { return geometry_; }
    [[nodiscard]] const AmbientState& ambient() const { return ambient_; }
    [[nodiscard]] const ChainGains& gains() const { return gains_; }

    [[nodiscard]] ThermalModel with_gains(ChainGains gains) const;

private:
    ThermalModel(KelvinPerWatt r, JoulesPerKelvin c, Seconds tau_heat, Seconds tau_cool, bool single,
                 const ActuatorGeometry& geometry, AmbientState ambient, ChainGains gains, Kelvin failure_rise);

    KelvinPerWatt r_thermal_;
    JoulesPerKelvin heat_capacity_;
    Seconds tau_heat_;
    Seconds tau_cool_;
    bool single_tau_;
    ActuatorGeometry geometry_;
    AmbientState ambient_;
    ChainGains gains_;
    Kelvin failure_rise_;
};

struct PulseSegment {
    Seconds start;
    Seconds duration;
    Watts power;

    [[nodiscard]] Seconds end() const { return start + duration; }
};

/// Time-sorted, non-overlapping constant-power pulses. Power is zero between them.
class PulseSchedule {
public:
    PulseSchedule() = default;
    explicit PulseSchedule(std::vector<PulseSegment> segments);

    /// count pulses of duration `duty / rate` every `1 / rate`, starting at `start`.
    static PulseSchedule train(Watts power, Hertz rate, double duty, std::size_t count,
                               Seconds start = Seconds(0.0));

    [[nodiscard]] const std::vector<PulseSegment>& segments() const { return segments_; }
    [[nodiscard]] bool empty() const { return segments_.empty(); }
    [[nodiscard]] Seconds end() const;

private:
    std::vector<PulseSegment> segments_;
};

/// Uniformly sampled simulation output. Only the wire temperature rise is
/// stored; the downstream channels are pure gains of it and are evaluated on
/// demand, so every channel has the same length by construction.
class SimTrace {
public:
    SimTrace(Seconds sample_period, std::vector<double> wire_rise_K, const ActuatorGeometry& geometry,
             AmbientState ambient, ChainGains gains);

    [[nodiscard]] Seconds sample_period() const { return sample_period_; }
    [[nodiscard]] std::size_t size() const { return wire_rise_.size(); }
    [[nodiscard]] double time_s(std::size_t i) const { return static_cast<double>(i) * sample_period_.value(); }

    [[nodiscard]] const std::vector<double>& wire_rise_K() const { return wire_rise_; }
    [[nodiscard]] std::vector<double> wire_temperature_C() const;
    [[nodiscard]] std::vector<double> air_temperature_K() const;
    [[nodiscard]] std::vector<double> gauge_pressure_Pa() const;
    [[nodiscard]] std::vector<double> force_N() const;
    [[nodiscard]] std::vector<double> displacement_mm() const;

    [[nodiscard]] double air_temperature_K(std::size_t i) const;
    [[nodiscard]] double force_N(std::size_t i) const;
    [[nodiscard]] double displacement_mm(std::size_t i) const;

    [[nodiscard]] const AmbientState& ambient() const { return ambient_; }

private:
    Seconds sample_period_;
    std::vector<double> wire_rise_;
    ActuatorGeometry geometry_;
    AmbientState ambient_;
    ChainGains gains_;
};

/// Closed-form heating from ambient at constant power: P R (1 - exp(-t / tau_heat)).
Kelvin step_response(const ThermalModel& model, Watts power, Seconds t);

/// Exact piecewise-exponential propagation of the schedule, sampled at
/// k * sample_period for k = 0 .. floor(t_end / sample_period).
SimTrace simulate(const ThermalModel& model, const PulseSchedule& schedule, Seconds t_end, Seconds sample_period);

/// Maximum force of a single pulse starting from ambient.
Newtons peak_force(const ThermalModel& model, Watts power, Seconds pulse_duration);

}  // namespace tpp
