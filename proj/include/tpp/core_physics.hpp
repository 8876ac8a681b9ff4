#pragma once

// Algebraic relations linking electrical drive, actuator geometry, cavity gas
// state, membrane force and displacement. All functions are pure.

#include <string>
#include <vector>

#include "tpp/units.hpp"

namespace tpp {

using namespace units;

/// Cavity and aperture dimensions of one pixel.
class ActuatorGeometry {
public:
    static constexpr double kDefaultCavityDepthMm = 1.6;

    ActuatorGeometry(Meters cavity_length, Meters cavity_width, Meters aperture_diameter,
                     Meters cavity_depth = millimeters(kDefaultCavityDepthMm));

    static ActuatorGeometry from_mm(double length_mm, double width_mm, double diameter_mm);

    [[nodiscard]] Meters cavity_length() const { return length_; }
    [[nodiscard]] Meters cavity_width() const { return width_; }
    [[nodiscard]] Meters aperture_diameter() const { return diameter_; }
    [[nodiscard]] Meters cavity_depth() const { return depth_; }

    /// Heating wire length: two runs along the cavity plus 1 mm of routing.
    [[nodiscard]] Meters wire_length() const;
    /// Membrane area exposed to the cavity, pi (D/2)^2.
    [[nodiscard]] SquareMeters pixel_area() const;
    /// L * w * depth; reported only, no equation uses it.
    [[nodiscard]] CubicMeters cavity_volume() const;

    /// Human-readable notes for dimensions outside the characterized regime
    /// (L in [2, 10] mm, w = 2 mm). Empty when inside.
    [[nodiscard]] std::vector<std::string> range_warnings() const;

private:
    Meters length_;
    Meters width_;
    Meters diameter_;
    Meters depth_;
};

struct ElectricalDrive {
    ElectricalDrive(Volts voltage, Ohms wire_resistance);

    Volts voltage;
    Ohms wire_resistance;
};

/// Initial cavity state. Pressure is absolute.
struct AmbientState {
    static constexpr double kDefaultTemperatureK = 293.15;
    static constexpr double kDefaultPressurePa = 101325.0;

    AmbientState() = default;
    AmbientState(Kelvin temperature, Pascals pressure);

    Kelvin temperature{kDefaultTemperatureK};
    Pascals pressure{kDefaultPressurePa};
};

/// Constant gains of the memoryless wire -> air -> force -> displacement chain.
struct ChainGains {
    static constexpr double kDefaultAirGain = 0.072;
    static constexpr double kDefaultComplianceMmPerN = 1.28;

    ChainGains() = default;
    ChainGains(double air_gain, MetersPerNewton compliance);

    /// Air temperature rise per unit wire temperature rise.
    double air_gain = kDefaultAirGain;
    MetersPerNewton compliance = millimeters_per_newton(kDefaultComplianceMmPerN);
};

Watts electrical_power(const ElectricalDrive& drive);

WattsPerMeter power_per_length(Watts power, const ActuatorGeometry& geometry);

/// Gauge pressure behind the membrane for a given isometric force.
Pascals gauge_pressure(Newtons force, const ActuatorGeometry& geometry);

/// Ideal-gas cavity temperature from the membrane force, T0 (F / (P0 A) + 1).
/// Throws ValidationError when the implied absolute pressure is below vacuum.
Kelvin air_temp_from_force(Newtons force, const ActuatorGeometry& geometry, const AmbientState& ambient);

/// Exact inverse of air_temp_from_force. Throws ValidationError for T <= 0 K.
Newtons force_from_air_temp(Kelvin air_temperature, const ActuatorGeometry& geometry,
                            const AmbientState& ambient);

Meters displacement_from_force(Newtons force, const ChainGains& gains);

}  // namespace tpp
