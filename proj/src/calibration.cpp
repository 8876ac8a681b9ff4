#include "tpp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
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

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ShuntCircuit::ShuntCircuit(Volts supply_, Ohms shunt_, Ohms circuit_)
    : supply(supply_), shunt(shunt_), circuit(circuit_) {
    require_positive(supply.value(), "supply voltage");
    require_positive(shunt.value(), "shunt resistance");
    require_positive(circuit.value(), "circuit resistance");
}

ResistivityTable::ResistivityTable(std::vector<Row> rows) : rows_(std::move(rows)) {
    if (rows_.size() < 2) throw ValidationError("resistivity table needs at least two rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!(rows_[i].relative_resistivity > 0.0)) {
            throw ValidationError("resistivity table row " + std::to_string(i) + " has non-positive resistivity");
        }
        if (i > 0 && !(rows_[i].temperature_C > rows_[i - 1].temperature_C)) {
            throw ValidationError("resistivity table temperatures must strictly increase (row " +
                                  std::to_string(i) + ")");
        }
    }
}

ResistivityTable ResistivityTable::read_csv(std::istream& in) {
    std::string line;
    bool header_seen = false;
    std::vector<Row> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {
            if (t != "temp_C,rel_resistivity") {
                throw ValidationError("resistivity table header must be 'temp_C,rel_resistivity'");
            }
            header_seen = true;
            continue;
        }
        std::istringstream ss(t);
        Row row{};
        char comma = 0;
        if (!(ss >> row.temperature_C >> comma >> row.relative_resistivity) || comma != ',') {
            throw ValidationError("resistivity table line " + std::to_string(line_no) + " is malformed");
        }
        rows.push_back(row);
    }
    return ResistivityTable(std::move(rows));
}

ResistivityTable ResistivityTable::read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open resistivity table '" + path + "'");
    return read_csv(in);
}

bool ResistivityTable::is_strictly_increasing() const {
    for (std::size_t i = 1; i < rows_.size(); ++i) {
        if (!(rows_[i].relative_resistivity > rows_[i - 1].relative_resistivity)) return false;
    }
    return true;
}

double ResistivityTable::temperature_for_ratio(double ratio, bool& clamped) const {
    const double rel = ratio * rows_.front().relative_resistivity;
    if (rel <= rows_.front().relative_resistivity) {
        clamped = rel < rows_.front().relative_resistivity;
        return rows_.front().temperature_C;
    }
    if (rel >= rows_.back().relative_resistivity) {
        clamped = rel > rows_.back().relative_resistivity;
        return rows_.back().temperature_C;
    }
    clamped = false;
    const auto it = std::upper_bound(rows_.begin(), rows_.end(), rel,
                                     [](double v, const Row& r) { return v < r.relative_resistivity; });
    const Row& hi = *it;
    const Row& lo = *(it - 1);
    const double f = (rel - lo.relative_resistivity) / (hi.relative_resistivity - lo.relative_resistivity);
    return lo.temperature_C + f * (hi.temperature_C - lo.temperature_C);
}

TauFit fit_tau(const Trace& trace, TimeWindow window, std::optional<double> baseline) {
    const Trace w = trace.slice(window);
    const auto& y = w.samples();
    const std::size_t n = y.size();
    if (n < 10) {
        throw ValidationError("cooling fit window holds " + std::to_string(n) + " samples; at least 10 needed");
    }

    double base = 0.0;
    if (baseline) {
        base = *baseline;
    } else {
        const auto& all = trace.samples();
        const std::size_t tail = std::max<std::size_t>(1, all.size() / 10);
        base = std::accumulate(all.end() - static_cast<std::ptrdiff_t>(tail), all.end(), 0.0) /
               static_cast<double>(tail);
    }

    std::vector<double> s(n);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(i) * w.sample_period();
        z[i] = y[i] - base;
    }
    const double z_max = *std::max_element(z.begin(), z.end());
    if (!(z_max > 0.0)) {
        throw FitError("cooling fit: no signal above the baseline; the window does not decay");
    }

    // Log-linear start, weighted by z^2 to undo the log's noise amplification.
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (z[i] <= 0.05 * z_max) continue;
        const double wt = z[i] * z[i];
        const double ly = std::log(z[i]);
        sw += wt;
        sx += wt * s[i];
        sy += wt * ly;
        sxx += wt * s[i] * s[i];
        sxy += wt * s[i] * ly;
        ++used;
    }
    const double denom = sw * sxx - sx * sx;
    if (used < 3 || !(denom > 0.0)) {
        throw FitError("cooling fit: too few samples above the baseline to estimate a decay");
    }
    const double slope = (sw * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) {
        throw FitError("cooling fit: signal does not decay over the window");
    }
    double amp = std::exp((sy - slope * sx) / sw);
    double rate = -slope;

    auto cost = [&](double a, double k) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = z[i] - a * std::exp(-k * s[i]);
            c += r * r;
        }
        return c;
    };

    double current = cost(amp, rate);
    for (int iter = 0; iter < 100; ++iter) {
        double j00 = 0.0, j01 = 0.0, j11 = 0.0, g0 = 0.0, g1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-rate * s[i]);
            const double r = z[i] - amp * e;
            const double da = e;
            const double dk = -amp * s[i] * e;
            j00 += da * da;
            j01 += da * dk;
            j11 += dk * dk;
            g0 += da * r;
            g1 += dk * r;
        }
        const double det = j00 * j11 - j01 * j01;
        if (!(det > 0.0)) break;
        const double d_amp = (j11 * g0 - j01 * g1) / det;
        const double d_rate = (j00 * g1 - j01 * g0) / det;
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            const double a2 = amp + step * d_amp;
            const double k2 = rate + step * d_rate;
            if (k2 > 0.0) {
                const double c2 = cost(a2, k2);
                if (c2 <= current) {
                    amp = a2;
                    rate = k2;
                    accepted = c2 < current;
                    current = c2;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (std::abs(step * d_rate) < 1e-12 * rate && std::abs(step * d_amp) < 1e-12 * std::abs(amp)) break;
    }

    const double span = s.back();
    if (!(rate > 0.0) || !(amp > 0.0) || 1.0 / rate > 1e3 * span) {
        throw FitError("cooling fit diverged: fitted time constant is non-positive or unbounded");
    }

    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - mean) * (v - mean);
    const double r2 = ss_tot > 0.0 ? 1.0 - current / ss_tot : 0.0;
    return TauFit{Seconds(1.0 / rate), amp, base, r2, n};
}

Trace wire_resistance_trace(const Trace& shunt_voltage, const ShuntCircuit& circuit) {
    shunt_voltage.require_kind(QuantityKind::shunt_voltage, "wire_resistance_trace");
    const Trace v = shunt_voltage.canonical();
    std::vector<double> r(v.size());
    const double numerator = (circuit.supply * circuit.shunt).value();
    const double fixed = (circuit.shunt + circuit.circuit).value();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double vs = v.samples()[i];
        if (!(vs > 0.0)) {
            std::ostringstream os;
            os << "shunt voltage sample " << i << " is " << vs << " V; the inverse divider needs V_shunt > 0";
            throw ValidationError(os.str());
        }
        const double total = numerator / vs;
        r[i] = total - fixed;
    }
    Trace out(QuantityKind::resistance, "ohm", v.sample_period(), std::move(r), v.start_time());
    out.metadata() = v.metadata();
    return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    if (window == 0) throw ValidationError("moving-average window must be at least 1 sample");
    const std::size_t n = values.size();
    if (window == 1) return {values.begin(), values.end()};
    const std::size_t left = (window - 1) / 2;
    const std::size_t right = window - 1 - left;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i >= left ? i - left : 0;
        const std::size_t e = std::min(n - 1, i + right);
        double sum = 0.0;
        for (std::size_t j = b; j <= e; ++j) sum += values[j];
        out[i] = sum / static_cast<double>(e - b + 1);
    }
    return out;
}

WireTemperature wire_temp_from_resistance(const Trace& wire_resistance, const ResistivityTable& table,
                                          std::size_t smoothing_window) {
    wire_resistance.require_kind(QuantityKind::resistance, "wire_temp_from_resistance");
    if (!table.is_strictly_increasing()) {
        throw ValidationError("resistivity table must be strictly increasing in resistivity to be inverted");
    }
    const auto& r = wire_resistance.samples();
    if (!(r.front() > 0.0)) {
        throw ValidationError("reference (first) wire resistance must be positive");
    }
    WireTemperature result{Trace(QuantityKind::temperature, "C", wire_resistance.sample_period(), {0.0}), false, {}};
    std::vector<double> temps(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        bool clamped = false;
        temps[i] = table.temperature_for_ratio(r[i] / r.front(), clamped);
        if (clamped) result.clamped_samples.push_back(i);
    }
    result.clamped = !result.clamped_samples.empty();
    result.temperature = Trace(QuantityKind::temperature, "C", wire_resistance.sample_period(),
                               moving_average(temps, smoothing_window), wire_resistance.start_time());
    result.temperature.metadata() = wire_resistance.metadata();
    return result;
}

ChainGains GainCalibration::gains() const {
    return ChainGains(air_gain, compliance);
}

GainCalibration calibrate_gains(const PeakPoint& point, const ActuatorGeometry& geometry,
                                const AmbientState& ambient) {
    const Kelvin wire_rise = point.wire_temperature - ambient.temperature;
    const Kelvin air_rise = point.air_temperature - ambient.temperature;
    if (!(wire_rise.value() > 0.0)) throw ValidationError("peak wire temperature must exceed ambient");
    if (!(air_rise.value() > 0.0)) throw ValidationError("peak air temperature must exceed ambient");
    require_positive(point.force.value(), "peak force");
    require_positive(point.displacement.value(), "peak displacement");

    GainCalibration cal;
    cal.air_gain = (air_rise / wire_rise).value();
    cal.compliance = point.displacement / point.force;
    const Newtons ideal = force_from_air_temp(point.air_temperature, geometry, ambient);
    cal.ideal_gas_mismatch = std::abs((ideal / point.force).value() - 1.0);
    cal.consistent = cal.ideal_gas_mismatch <= kIdealGasTolerance;
    cal.in_physical_range = cal.air_gain > 0.0 && cal.air_gain < 1.0;
    if (!cal.in_physical_range) {
        std::ostringstream os;
        os << "air gain " << cal.air_gain << " is outside (0, 1): the air cannot heat as much as the wire";
        cal.flags.push_back(os.str());
    }
    if (!cal.consistent) {
        std::ostringstream os;
        os << "peak force and air temperature disagree with the ideal-gas relation by "
           << 100.0 * cal.ideal_gas_mismatch << " %";
        cal.flags.push_back(os.str());
    }
    return cal;
}

double RegressionFit::predict(double x) const {
    if (space == FitSpace::log_log) return std::pow(10.0, slope * std::log10(x) + intercept);
    return slope * x + intercept;
}

RegressionFit linear_fit(std::span<const double> x, std::span<const double> y, FitSpace space) {
    if (x.size() != y.size()) throw ValidationError("regression inputs differ in length");
    if (x.size() < 2) throw ValidationError("regression needs at least two points");
    std::vector<double> u(x.begin(), x.end());
    std::vector<double> v(y.begin(), y.end());
    if (space == FitSpace::log_log) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] > 0.0) || !(v[i] > 0.0)) {
                throw ValidationError("log-log regression needs strictly positive data (point " + std::to_string(i) +
                                      ")");
            }
            u[i] = std::log10(u[i]);
            v[i] = std::log10(v[i]);
        }
    }
    const double n = static_cast<double>(u.size());
    const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
    const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sxx += (u[i] - mu) * (u[i] - mu);
        sxy += (u[i] - mu) * (v[i] - mv);
        syy += (v[i] - mv) * (v[i] - mv);
    }
    if (!(sxx > 0.0)) throw ValidationError("regression needs at least two distinct x values");

    RegressionFit fit;
    fit.space = space;
    fit.slope = sxy / sxx;
    fit.intercept = mv - fit.slope * mu;
    double ss_res = 0.0;
    fit.residuals.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = v[i] - (fit.slope * u[i] + fit.intercept);
        fit.residuals.push_back(r);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace tpp
