#pragma once

// Thermal-failure operating envelope in (power per unit length, pulse
// duration) space.
//
// The boundary is the power per unit wire length at which a single pulse of
// duration t_p heats the wire from ambient to its failure temperature:
//
//     rho(t_p) = T_fail / (a (1 - exp(-t_p / (a b))))
//
// with a the length-scaled thermal resistance (m K / W) and b the
// length-scaled heat capacity (J / (m K)). The product a b is the wire's
// heating time constant. T_fail is treated as a rise over ambient.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpp/units.hpp"

namespace tpp {

using namespace units;

inline constexpr double kDefaultSafetyMargin = 0.10;

struct EnvelopeFit {
    static constexpr double kReferenceAMmKPerW = 6601.0;
    static constexpr double kReferenceBUjPerMmK = 6.51;
    static constexpr double kDefaultFailureRiseK = 1400.0;

    EnvelopeFit(MeterKelvinPerWatt a, JoulesPerMeterKelvin b, Kelvin failure_rise = Kelvin(kDefaultFailureRiseK));

    /// a = 6601 mm K/W, b = 6.51 uJ/(mm K), T_fail = 1400 K.
    static EnvelopeFit reference();

    [[nodiscard]] Seconds time_constant() const { return a * b; }
    /// T_fail / a, the boundary as t_p grows without bound.
    [[nodiscard]] WattsPerMeter asymptote() const { return failure_rise / a; }

    MeterKelvinPerWatt a;
    JoulesPerMeterKelvin b;
    Kelvin failure_rise;

    // Diagnostics, populated by fit_envelope.
    std::vector<double> log_residuals;
    double r_squared = 1.0;
};

struct FailurePoint {
    FailurePoint(WattsPerMeter rho, Seconds pulse_duration, std::optional<Meters> cavity_length = std::nullopt);

    WattsPerMeter rho;
    Seconds pulse_duration;
    std::optional<Meters> cavity_length;
};

struct SafetyReport {
    bool safe = false;
    WattsPerMeter rho;
    Seconds pulse_duration;
    double margin = 0.0;
    WattsPerMeter boundary;  ///< failure boundary at this pulse duration
    WattsPerMeter allowed;   ///< (1 - margin) * boundary
    /// allowed / rho; >= 1 when safe.
    double headroom_ratio = 0.0;
    /// Longest pulse at this rho that still satisfies the margin. Empty when
    /// any duration is safe.
    std::optional<Seconds> max_safe_pulse;
};

WattsPerMeter boundary_rho(const EnvelopeFit& fit, Seconds pulse_duration);

/// Longest pulse at `rho` before the wire reaches T_fail. Empty ("unbounded
/// safe") when rho does not exceed the asymptote T_fail / a.
std::optional<Seconds> max_pulse_duration(const EnvelopeFit& fit, WattsPerMeter rho);

SafetyReport is_safe(const EnvelopeFit& fit, WattsPerMeter rho, Seconds pulse_duration,
                     double margin = kDefaultSafetyMargin);

/// One-line explanation of an unsafe report: the excess over the allowed
/// power per length, the longest pulse allowed with the margin and the
/// longest pulse before failure.
std::string describe_violation(const EnvelopeFit& fit, const SafetyReport& report);

/// Least-squares fit of (a, b) to failure points in log(rho) space with
/// T_fail held fixed: coarse log grid over (a, a b), then Gauss-Newton.
/// Throws FitError for point sets that cannot identify both parameters.
EnvelopeFit fit_envelope(std::span<const FailurePoint> points, Kelvin failure_rise = Kelvin(1400.0));

}  // namespace tpp
