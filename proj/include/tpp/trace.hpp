#pragma once

// Uniformly sampled, unit-tagged time series and its CSV representation.
//
// CSV layout:
//
//     # key=value            (optional metadata, any number of lines)
//     time_s,<kind>_<unit>
//     0,0.0123
//     0.001,0.0131
//     ...
//
// Uniform sampling is validated on load: every time stamp must lie within
// 1e-6 sample periods of start + i * period.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tpp {

enum class QuantityKind { force, displacement, shunt_voltage, temperature, resistance, pressure };

std::string_view to_string(QuantityKind kind);
QuantityKind parse_quantity_kind(std::string_view name);

/// Canonical unit of each kind: N, mm, V, C, ohm, Pa.
std::string_view canonical_unit(QuantityKind kind);

/// Inclusive time interval in seconds.
struct TimeWindow {
    double start_s;
    double end_s;
};

class Trace {
public:
    Trace(QuantityKind kind, std::string unit, double sample_period_s, std::vector<double> samples,
          double start_time_s = 0.0);

    [[nodiscard]] QuantityKind kind() const { return kind_; }
    [[nodiscard]] const std::string& unit() const { return unit_; }
    [[nodiscard]] double sample_period() const { return sample_period_; }
    [[nodiscard]] double start_time() const { return start_time_; }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }
    [[nodiscard]] const std::vector<double>& samples() const { return samples_; }
    [[nodiscard]] double time_at(std::size_t i) const {
        return start_time_ + static_cast<double>(i) * sample_period_;
    }
    [[nodiscard]] double end_time() const { return time_at(samples_.size() - 1); }

    std::map<std::string, std::string>& metadata() { return metadata_; }
    [[nodiscard]] const std::map<std::string, std::string>& metadata() const { return metadata_; }

    /// Same data expressed in the kind's canonical unit.
    [[nodiscard]] Trace canonical() const;
    /// Samples whose time lies in the window (inclusive, 1e-9 period slack).
    [[nodiscard]] Trace slice(TimeWindow window) const;

    /// Throws ValidationError when the kind differs.
    void require_kind(QuantityKind expected, std::string_view operation) const;

private:
    QuantityKind kind_;
    std::string unit_;
    double sample_period_;
    double start_time_;
    std::vector<double> samples_;
    std::map<std::string, std::string> metadata_;
};

Trace read_trace_csv(std::istream& in);
Trace read_trace_csv_file(const std::string& path);
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv_file(const std::string& path, const Trace& trace);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace tpp
