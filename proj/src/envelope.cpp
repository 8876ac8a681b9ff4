#include "tpp/envelope.hpp"

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

// Residuals and Jacobian of log(rho_i) - log(boundary(t_i)) in
// p = (log a, log tau).
struct LogModel {
    std::span<const FailurePoint> points;
    double log_failure;

    [[nodiscard]] double cost(double log_a, double log_tau) const {
        double sum = 0.0;
        const double tau = std::exp(log_tau);
        for (const auto& p : points) {
            const double r = residual(p, log_a, tau);
            sum += r * r;
        }
        return sum;
    }

    [[nodiscard]] double residual(const FailurePoint& p, double log_a, double tau) const {
        const double x = p.pulse_duration.value() / tau;
        const double model = log_failure - log_a - std::log(-std::expm1(-x));
        return std::log(p.rho.value()) - model;
    }
};

}  // namespace

EnvelopeFit::EnvelopeFit(MeterKelvinPerWatt a_, JoulesPerMeterKelvin b_, Kelvin failure_rise_)
    : a(a_), b(b_), failure_rise(failure_rise_) {
    require_positive(a.value(), "envelope parameter a");
    require_positive(b.value(), "envelope parameter b");
    require_positive(failure_rise.value(), "failure temperature rise");
}

EnvelopeFit EnvelopeFit::reference() {
    return EnvelopeFit(millimeter_kelvin_per_watt(kReferenceAMmKPerW),
                       microjoules_per_millimeter_kelvin(kReferenceBUjPerMmK), Kelvin(kDefaultFailureRiseK));
}

FailurePoint::FailurePoint(WattsPerMeter rho_, Seconds pulse_duration_, std::optional<Meters> cavity_length_)
    : rho(rho_), pulse_duration(pulse_duration_), cavity_length(cavity_length_) {
    require_positive(rho.value(), "failure point rho");
    require_positive(pulse_duration.value(), "failure point pulse duration");
}

WattsPerMeter boundary_rho(const EnvelopeFit& fit, Seconds pulse_duration) {
    if (!(pulse_duration.value() > 0.0)) {
        throw ValidationError("envelope boundary is defined for pulse durations > 0");
    }
    if (std::isinf(pulse_duration.value())) return fit.asymptote();
    const double x = (pulse_duration / fit.time_constant()).value();
    return fit.failure_rise / (fit.a * -std::expm1(-x));
}

std::optional<Seconds> max_pulse_duration(const EnvelopeFit& fit, WattsPerMeter rho) {
    require_positive(rho.value(), "power per unit length");
    const double fraction = (fit.failure_rise / (fit.a * rho)).value();
    if (fraction >= 1.0) return std::nullopt;
    return fit.time_constant() * -std::log1p(-fraction);
}

SafetyReport is_safe(const EnvelopeFit& fit, WattsPerMeter rho, Seconds pulse_duration, double margin) {
    if (!(margin >= 0.0 && margin < 1.0)) {
        throw ValidationError("safety margin must lie in [0, 1)");
    }
    if (!(rho.value() >= 0.0)) {
        throw ValidationError("power per unit length must be non-negative");
    }
    SafetyReport report;
    report.rho = rho;
    report.pulse_duration = pulse_duration;
    report.margin = margin;
    report.boundary = boundary_rho(fit, pulse_duration);
    report.allowed = (1.0 - margin) * report.boundary;
    report.safe = rho <= report.allowed;
    report.headroom_ratio = rho.value() > 0.0 ? (report.allowed / rho).value()
                                              : std::numeric_limits<double>::infinity();
    if (rho.value() > 0.0) {
        // rho <= (1 - m) boundary(t)  <=>  boundary(t) >= rho / (1 - m)
        report.max_safe_pulse = max_pulse_duration(fit, rho / (1.0 - margin));
    }
    return report;
}

std::string describe_violation(const EnvelopeFit& fit, const SafetyReport& report) {
    std::ostringstream os;
    os.precision(4);
    os << "rho = " << to_watts_per_millimeter(report.rho) << " W/mm at t_p = " << report.pulse_duration.value() * 1e3
       << " ms exceeds the allowed " << to_watts_per_millimeter(report.allowed) << " W/mm ("
       << report.margin * 100.0 << "% margin) by " << ((report.rho / report.allowed).value() - 1.0) * 100.0 << "%";
    if (report.max_safe_pulse) {
        os << "; max safe t_p = " << report.max_safe_pulse->value() * 1e3 << " ms with margin";
    }
    if (const auto failure = max_pulse_duration(fit, report.rho)) {
        os << ", wire failure at t_p = " << failure->value() * 1e3 << " ms";
    }
    return os.str();
}

EnvelopeFit fit_envelope(std::span<const FailurePoint> points, Kelvin failure_rise) {
    require_positive(failure_rise.value(), "failure temperature rise");
    if (points.size() < 3) {
        throw FitError("envelope fit needs at least 3 failure points (got " + std::to_string(points.size()) + ")");
    }
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = 0.0;
    double rho_min = std::numeric_limits<double>::infinity();
    double rho_max = 0.0;
    for (const auto& p : points) {
        t_min = std::min(t_min, p.pulse_duration.value());
        t_max = std::max(t_max, p.pulse_duration.value());
        rho_min = std::min(rho_min, p.rho.value());
        rho_max = std::max(rho_max, p.rho.value());
    }
    if (t_max <= t_min * (1.0 + 1e-12)) {
        throw FitError("all failure points share one pulse duration; the time constant is unidentifiable");
    }

    const LogModel model{points, std::log(failure_rise.value())};

    // Coarse grid. a >= T_fail / rho always holds on the boundary, so the
    // lower end of the a-range is anchored at the largest observed rho.
    constexpr int kGrid = 121;
    const double la_lo = std::log(failure_rise.value() / rho_max) - std::log(2.0);
    const double la_hi = std::log(failure_rise.value() / rho_min) + std::log(1e3);
    const double lt_lo = std::log(t_min) - std::log(1e3);
    const double lt_hi = std::log(t_max) + std::log(1e3);
    double best_cost = std::numeric_limits<double>::infinity();
    int best_i = 0;
    int best_j = 0;
    for (int i = 0; i < kGrid; ++i) {
        const double la = la_lo + (la_hi - la_lo) * i / (kGrid - 1);
        for (int j = 0; j < kGrid; ++j) {
            const double lt = lt_lo + (lt_hi - lt_lo) * j / (kGrid - 1);
            const double c = model.cost(la, lt);
            if (c < best_cost) {
                best_cost = c;
                best_i = i;
                best_j = j;
            }
        }
    }
    if (best_j == 0 || best_j == kGrid - 1 || best_i == kGrid - 1) {
        throw FitError("failure points do not constrain the boundary curvature "
                       "(best time constant lies at the search limit); spread the pulse durations "
                       "across the knee of the boundary");
    }

    double la = la_lo + (la_hi - la_lo) * best_i / (kGrid - 1);
    double lt = lt_lo + (lt_hi - lt_lo) * best_j / (kGrid - 1);
    double cost = best_cost;

    // Gauss-Newton with step halving.
    for (int iter = 0; iter < 200; ++iter) {
        const double tau = std::exp(lt);
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, jtr0 = 0.0, jtr1 = 0.0;
        for (const auto& p : points) {
            const double x = p.pulse_duration.value() / tau;
            const double r = model.residual(p, la, tau);
            const double j0 = 1.0;
            const double j1 = -x / std::expm1(x);
            jtj00 += j0 * j0;
            jtj01 += j0 * j1;
            jtj11 += j1 * j1;
            jtr0 += j0 * r;
            jtr1 += j1 * r;
        }
        const double det = jtj00 * jtj11 - jtj01 * jtj01;
        if (!(det > 1e-12 * jtj00 * jtj11)) {
            throw FitError("envelope fit normal equations are singular; the point set cannot separate a and b");
        }
        const double d0 = -(jtj11 * jtr0 - jtj01 * jtr1) / det;
        const double d1 = -(jtj00 * jtr1 - jtj01 * jtr0) / det;

        double step = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            const double c = model.cost(la + step * d0, lt + step * d1);
            if (c <= cost) {
                la += step * d0;
                lt += step * d1;
                improved = c < cost;
                cost = c;
                break;
            }
            step *= 0.5;
        }
        if (!improved || std::max(std::abs(step * d0), std::abs(step * d1)) < 1e-13) break;
    }

    const double a_si = std::exp(la);
    const double tau = std::exp(lt);
    EnvelopeFit fit(MeterKelvinPerWatt(a_si), JoulesPerMeterKelvin(tau / a_si), failure_rise);

    double mean = 0.0;
    for (const auto& p : points) mean += std::log(p.rho.value());
    mean /= static_cast<double>(points.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    fit.log_residuals.reserve(points.size());
    for (const auto& p : points) {
        const double r = model.residual(p, la, tau);
        fit.log_residuals.push_back(r);
        ss_res += r * r;
        const double d = std::log(p.rho.value()) - mean;
        ss_tot += d * d;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

}  // namespace tpp
