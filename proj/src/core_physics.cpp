#include "tpp/core_physics.hpp"

#include <cmath>
#include <numbers>
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

}  // namespace

ActuatorGeometry::ActuatorGeometry(Meters cavity_length, Meters cavity_width, Meters aperture_diameter,
                                   Meters cavity_depth)
    : length_(cavity_length), width_(cavity_width), diameter_(aperture_diameter), depth_(cavity_depth) {
    require_positive(length_.value(), "cavity length");
    require_positive(width_.value(), "cavity width");
    require_positive(diameter_.value(), "aperture diameter");
    require_positive(depth_.value(), "cavity depth");
}

ActuatorGeometry ActuatorGeometry::from_mm(double length_mm, double width_mm, double diameter_mm) {
    return ActuatorGeometry(millimeters(length_mm), millimeters(width_mm), millimeters(diameter_mm));
}

Meters ActuatorGeometry::wire_length() const {
    return 2.0 * length_ + millimeters(1.0);
}

SquareMeters ActuatorGeometry::pixel_area() const {
    const Meters radius = diameter_ / 2.0;
    return std::numbers::pi * (radius * radius);
}

CubicMeters ActuatorGeometry::cavity_volume() const {
    return length_ * width_ * depth_;
}

std::vector<std::string> ActuatorGeometry::range_warnings() const {
    std::vector<std::string> out;
    const double length_mm = to_millimeters(length_);
    const double width_mm = to_millimeters(width_);
    if (length_mm < 2.0 || length_mm > 10.0) {
        std::ostringstream os;
        os << "cavity length " << length_mm << " mm is outside the characterized range [2, 10] mm";
        out.push_back(os.str());
    }
    if (std::abs(width_mm - 2.0) > 1e-9) {
        std::ostringstream os;
        os << "cavity width " << width_mm << " mm differs from the characterized 2 mm";
        out.push_back(os.str());
    }
    return out;
}

ElectricalDrive::ElectricalDrive(Volts v, Ohms r) : voltage(v), wire_resistance(r) {
    if (!(voltage.value() >= 0.0) || !std::isfinite(voltage.value())) {
        throw ValidationError("drive voltage must be non-negative");
    }
    require_positive(wire_resistance.value(), "wire resistance");
}

AmbientState::AmbientState(Kelvin t, Pascals p) : temperature(t), pressure(p) {
    require_positive(temperature.value(), "ambient temperature");
    require_positive(pressure.value(), "ambient pressure");
}

ChainGains::ChainGains(double gain, MetersPerNewton k) : air_gain(gain), compliance(k) {
    require_positive(air_gain, "air gain");
    if (air_gain >= 1.0) {
        throw ValidationError("air gain must be below 1 (air cannot heat more than the wire)");
    }
    require_positive(compliance.value(), "membrane compliance");
}

Watts electrical_power(const ElectricalDrive& drive) {
    return drive.voltage * drive.voltage / drive.wire_resistance;
}

WattsPerMeter power_per_length(Watts power, const ActuatorGeometry& geometry) {
    if (!(power.value() >= 0.0)) {
        throw ValidationError("electrical power must be non-negative");
    }
    return power / geometry.wire_length();
}

Pascals gauge_pressure(Newtons force, const ActuatorGeometry& geometry) {
    return force / geometry.pixel_area();
}

Kelvin air_temp_from_force(Newtons force, const ActuatorGeometry& geometry, const AmbientState& ambient) {
    const Newtons vacuum_bound = -(ambient.pressure * geometry.pixel_area());
    if (force < vacuum_bound) {
        std::ostringstream os;
        os << "force " << force.value() << " N implies cavity pressure below vacuum (bound "
           << vacuum_bound.value() << " N)";
        throw ValidationError(os.str());
    }
    const double relative = (force / (ambient.pressure * geometry.pixel_area())).value();
    return ambient.temperature * (relative + 1.0);
}

Newtons force_from_air_temp(Kelvin air_temperature, const ActuatorGeometry& geometry,
                            const AmbientState& ambient) {
    if (!(air_temperature.value() > 0.0)) {
        throw ValidationError("air temperature must be above absolute zero");
    }
    const double relative = ((air_temperature - ambient.temperature) / ambient.temperature).value();
    return ambient.pressure * geometry.pixel_area() * relative;
}

Meters displacement_from_force(Newtons force, const ChainGains& gains) {
    if (!(force.value() >= 0.0)) {
        throw ValidationError("free displacement is defined for non-negative force only");
    }
    return gains.compliance * force;
}

}  // namespace tpp
