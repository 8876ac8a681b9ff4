#include "tpp/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tpp/error.hpp"

namespace tpp {

namespace {

struct UnitEntry {
    QuantityKind kind;
    std::string_view unit;
    double to_canonical;
    double offset;  // canonical = value * to_canonical + offset
};

constexpr UnitEntry kUnits[] = {
    {QuantityKind::force, "N", 1.0, 0.0},
    {QuantityKind::force, "mN", 1e-3, 0.0},
    {QuantityKind::displacement, "mm", 1.0, 0.0},
    {QuantityKind::displacement, "um", 1e-3, 0.0},
    {QuantityKind::displacement, "m", 1e3, 0.0},
    {QuantityKind::shunt_voltage, "V", 1.0, 0.0},
    {QuantityKind::shunt_voltage, "mV", 1e-3, 0.0},
    {QuantityKind::temperature, "C", 1.0, 0.0},
    {QuantityKind::temperature, "K", 1.0, -273.15},
    {QuantityKind::resistance, "ohm", 1.0, 0.0},
    {QuantityKind::pressure, "Pa", 1.0, 0.0},
    {QuantityKind::pressure, "kPa", 1e3, 0.0},
};

const UnitEntry* find_unit(QuantityKind kind, std::string_view unit) {
    for (const auto& e : kUnits) {
        if (e.kind == kind && e.unit == unit) return &e;
    }
    return nullptr;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, std::size_t line) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError("line " + std::to_string(line) + ": cannot parse number '" + t + "'");
    }
    return v;
}

}  // namespace

std::string_view to_string(QuantityKind kind) {
    switch (kind) {
        case QuantityKind::force: return "force";
        case QuantityKind::displacement: return "displacement";
        case QuantityKind::shunt_voltage: return "shunt_voltage";
        case QuantityKind::temperature: return "temperature";
        case QuantityKind::resistance: return "resistance";
        case QuantityKind::pressure: return "pressure";
    }
    return "unknown";
}

QuantityKind parse_quantity_kind(std::string_view name) {
    for (auto k : {QuantityKind::force, QuantityKind::displacement, QuantityKind::shunt_voltage,
                   QuantityKind::temperature, QuantityKind::resistance, QuantityKind::pressure}) {
        if (to_string(k) == name) return k;
    }
    throw ValidationError("unknown quantity kind '" + std::string(name) + "'");
}

std::string_view canonical_unit(QuantityKind kind) {
    switch (kind) {
        case QuantityKind::force: return "N";
        case QuantityKind::displacement: return "mm";
        case QuantityKind::shunt_voltage: return "V";
        case QuantityKind::temperature: return "C";
        case QuantityKind::resistance: return "ohm";
        case QuantityKind::pressure: return "Pa";
    }
    return "";
}

Trace::Trace(QuantityKind kind, std::string unit, double sample_period_s, std::vector<double> samples,
             double start_time_s)
    : kind_(kind),
      unit_(std::move(unit)),
      sample_period_(sample_period_s),
      start_time_(start_time_s),
      samples_(std::move(samples)) {
    if (!(sample_period_ > 0.0) || !std::isfinite(sample_period_)) {
        throw ValidationError("trace sample period must be positive");
    }
    if (samples_.empty()) {
        throw ValidationError("trace must hold at least one sample");
    }
    if (!std::isfinite(start_time_)) {
        throw ValidationError("trace start time must be finite");
    }
    if (find_unit(kind_, unit_) == nullptr) {
        throw ValidationError("unit '" + unit_ + "' is not valid for quantity " + std::string(to_string(kind_)));
    }
}

Trace Trace::canonical() const {
    const UnitEntry* e = find_unit(kind_, unit_);
    if (e->to_canonical == 1.0 && e->offset == 0.0) return *this;
    std::vector<double> out(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = samples_[i] * e->to_canonical + e->offset;
    Trace t(kind_, std::string(canonical_unit(kind_)), sample_period_, std::move(out), start_time_);
    t.metadata_ = metadata_;
    return t;
}

Trace Trace::slice(TimeWindow window) const {
    if (!(window.end_s >= window.start_s)) {
        throw ValidationError("time window end precedes its start");
    }
    const double slack = 1e-9 * sample_period_;
    const double first = std::ceil((window.start_s - start_time_ - slack) / sample_period_);
    const double last = std::floor((window.end_s - start_time_ + slack) / sample_period_);
    const double lo = std::max(0.0, first);
    const double hi = std::min(static_cast<double>(samples_.size() - 1), last);
    if (hi < lo) {
        throw ValidationError("time window contains no samples of the trace");
    }
    const auto b = static_cast<std::size_t>(lo);
    const auto e = static_cast<std::size_t>(hi) + 1;
    Trace t(kind_, unit_, sample_period_, std::vector<double>(samples_.begin() + b, samples_.begin() + e),
            time_at(b));
    t.metadata_ = metadata_;
    return t;
}

void Trace::require_kind(QuantityKind expected, std::string_view operation) const {
    if (kind_ != expected) {
        throw ValidationError(std::string(operation) + " expects a " + std::string(to_string(expected)) +
                              " trace, got " + std::string(to_string(kind_)));
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Trace read_trace_csv(std::istream& in) {
    std::map<std::string, std::string> metadata;
    std::string line;
    std::size_t line_no = 0;
    std::string header;
    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const std::string body = trim(std::string_view(t).substr(1));
            const auto eq = body.find('=');
            if (eq != std::string::npos) metadata[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
            continue;
        }
        if (header.empty()) {
            header = t;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected two columns");
        }
        times.push_back(parse_number(std::string_view(t).substr(0, comma), line_no));
        values.push_back(parse_number(std::string_view(t).substr(comma + 1), line_no));
    }
    if (header.empty()) throw ValidationError("trace CSV has no header");
    const auto comma = header.find(',');
    if (comma == std::string::npos || trim(header.substr(0, comma)) != "time_s") {
        throw ValidationError("trace CSV header must start with 'time_s,'");
    }
    const std::string column = trim(header.substr(comma + 1));
    const auto underscore = column.rfind('_');
    if (underscore == std::string::npos) {
        throw ValidationError("trace CSV column '" + column + "' must be <quantity>_<unit>");
    }
    const QuantityKind kind = parse_quantity_kind(column.substr(0, underscore));
    const std::string unit = column.substr(underscore + 1);
    if (values.empty()) throw ValidationError("trace CSV has no samples");

    double period = 0.0;
    if (auto it = metadata.find("sample_period_s"); it != metadata.end()) {
        period = parse_number(it->second, 0);
    } else if (times.size() >= 2) {
        period = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    } else {
        throw ValidationError("single-sample trace needs '# sample_period_s=' metadata");
    }
    if (!(period > 0.0)) throw ValidationError("trace time stamps must increase");
    const double tolerance = 1e-6 * period;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double expected = times.front() + static_cast<double>(i) * period;
        if (std::abs(times[i] - expected) > tolerance) {
            std::ostringstream os;
            os << "non-uniform sampling at sample " << i << ": t = " << times[i] << " s, expected " << expected
               << " s";
            throw ValidationError(os.str());
        }
    }
    Trace trace(kind, unit, period, std::move(values), times.front());
    metadata.erase("sample_period_s");
    trace.metadata() = std::move(metadata);
    return trace;
}

Trace read_trace_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open trace file '" + path + "'");
    return read_trace_csv(in);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "# sample_period_s=" << format_double(trace.sample_period()) << '\n';
    for (const auto& [k, v] : trace.metadata()) out << "# " << k << '=' << v << '\n';
    out << "time_s," << to_string(trace.kind()) << '_' << trace.unit() << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << format_double(trace.time_at(i)) << ',' << format_double(trace.samples()[i]) << '\n';
    }
}

void write_trace_csv_file(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write trace file '" + path + "'");
    write_trace_csv(out, trace);
}

}  // namespace tpp
