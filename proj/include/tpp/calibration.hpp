#pragma once

// Parameter extraction from measured traces: cooling time constant, shunt
// based wire resistance and temperature, chain gains, and ordinary least
// squares regression.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpp/core_physics.hpp"
#include "tpp/trace.hpp"
#include "tpp/units.hpp"

namespace tpp {

struct ShuntCircuit {
    static constexpr double kDefaultShuntOhm = 0.22;
    static constexpr double kDefaultCircuitOhm = 2.1;

    explicit ShuntCircuit(Volts supply, Ohms shunt = Ohms(kDefaultShuntOhm), Ohms circuit = Ohms(kDefaultCircuitOhm));

    Volts supply;
    Ohms shunt;
    Ohms circuit;
};

/// Resistivity relative to the first row, tabulated against temperature.
class ResistivityTable {
public:
    struct Row {
        double temperature_C;
        double relative_resistivity;
    };

    explicit ResistivityTable(std::vector<Row> rows);

    /// CSV with header `temp_C,rel_resistivity`; `#` lines are comments.
    static ResistivityTable read_csv(std::istream& in);
    static ResistivityTable read_csv_file(const std::string& path);

    [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
    [[nodiscard]] double reference_temperature_C() const { return rows_.front().temperature_C; }
    [[nodiscard]] bool is_strictly_increasing() const;

    /// Inverse linear interpolation. Ratios outside the table clamp to the
    /// end rows and set `clamped`.
    [[nodiscard]] double temperature_for_ratio(double ratio, bool& clamped) const;

private:
    std::vector<Row> rows_;
};

struct TauFit {
    Seconds tau;
    double amplitude;  ///< value above baseline at the window start, in trace units
    double baseline;
    double r_squared;
    std::size_t samples;
};

/// Fits y(t) = baseline + y0 exp(-(t - t_start) / tau) over `window`.
///
/// The baseline defaults to the mean of the last 10 % of the whole trace.
/// A weighted linear fit to log(y - baseline) gives the starting point, then
/// Gauss-Newton on (y0, tau) refines it in the signal domain. r^2 is reported
/// in the signal domain. Throws FitError when the window does not decay.
TauFit fit_tau(const Trace& trace, TimeWindow window, std::optional<double> baseline = std::nullopt);

/// R_tot = V+ R_shunt / V_shunt, R_wire = R_tot - R_shunt - R_circuit.
Trace wire_resistance_trace(const Trace& shunt_voltage, const ShuntCircuit& circuit);

struct WireTemperature {
    Trace temperature;  ///< degC
    bool clamped = false;
    std::vector<std::size_t> clamped_samples;
};

inline constexpr std::size_t kDefaultSmoothingWindow = 5;

/// Maps R(t) / R(0) through the inverted resistivity table, then applies a
/// centered moving average (edges use the samples available).
WireTemperature wire_temp_from_resistance(const Trace& wire_resistance, const ResistivityTable& table,
                                          std::size_t smoothing_window = kDefaultSmoothingWindow);

std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Peak values of one characterization pulse. Temperatures are absolute.
struct PeakPoint {
    Kelvin wire_temperature;
    Kelvin air_temperature;
    Newtons force;
    Meters displacement;
};

struct GainCalibration {
    double air_gain = 0.0;
    MetersPerNewton compliance;
    /// |F_ideal_gas / F - 1| where F_ideal_gas follows from the air temperature.
    double ideal_gas_mismatch = 0.0;
    bool in_physical_range = false;
    bool consistent = false;
    std::vector<std::string> flags;

    /// Throws ValidationError when the gains violate the ChainGains invariants.
    [[nodiscard]] ChainGains gains() const;
};

inline constexpr double kIdealGasTolerance = 0.05;

GainCalibration calibrate_gains(const PeakPoint& point, const ActuatorGeometry& geometry,
                                const AmbientState& ambient);

enum class FitSpace { linear, log_log };

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    std::vector<double> residuals;
    FitSpace space = FitSpace::linear;

    /// Evaluates the fitted relation in the original (non-log) space.
    [[nodiscard]] double predict(double x) const;
};

/// Ordinary least squares. In log_log space the fit is log10(y) = slope
/// log10(x) + intercept. A zero-variance y with zero residual has r^2 = 1.
RegressionFit linear_fit(std::span<const double> x, std::span<const double> y, FitSpace space = FitSpace::linear);

}  // namespace tpp
