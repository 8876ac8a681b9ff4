#pragma once

// Reference computations written independently of the library code paths
// they check. Everything here uses plain doubles in SI units.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tpp::test {

inline constexpr double kPi = 3.14159265358979323846;

inline double rel_err(double actual, double expected) { return std::abs(actual - expected) / std::abs(expected); }

/// Single-tau wire rise by superposition of switched steps:
/// sum over pulses of P R [u(t - s) - u(t - e)] with u(x) = 1 - exp(-x / tau) for x > 0.
struct Pulse {
    double start;
    double end;
    double power;
};

inline double superposed_rise(const std::vector<Pulse>& pulses, double r, double tau, double t) {
    double rise = 0.0;
    for (const auto& p : pulses) {
        if (t > p.start) rise += p.power * r * (1.0 - std::exp(-(t - p.start) / tau));
        if (t > p.end) rise -= p.power * r * (1.0 - std::exp(-(t - p.end) / tau));
    }
    return rise;
}

/// Dual-tau rise by classical RK4 on dT/dt = (P R - T) / tau_on while powered
/// and -T / tau_off otherwise, with steps that land on every switching edge.
inline double rk4_rise(const std::vector<Pulse>& pulses, double r, double tau_on, double tau_off, double t_end,
                       int steps_per_span = 4000) {
    double t = 0.0;
    double y = 0.0;
    auto integrate = [&](double until, double target, double tau) {
        if (until <= t) return;
        const double h = (until - t) / steps_per_span;
        auto f = [&](double v) { return (target - v) / tau; };
        for (int i = 0; i < steps_per_span; ++i) {
            const double k1 = f(y);
            const double k2 = f(y + 0.5 * h * k1);
            const double k3 = f(y + 0.5 * h * k2);
            const double k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        t = until;
    };
    for (const auto& p : pulses) {
        integrate(std::min(p.start, t_end), 0.0, tau_off);
        integrate(std::min(p.end, t_end), p.power * r, tau_on);
    }
    integrate(t_end, 0.0, tau_off);
    return y;
}

/// Failure boundary computed straight from the closed-form single-pulse heating
/// law: the rho whose step response reaches t_fail at t_p.
inline double boundary_W_per_mm(double a_mm_K_per_W, double b_uJ_per_mm_K, double t_fail, double t_p_s) {
    const double tau = a_mm_K_per_W * b_uJ_per_mm_K * 1e-6;  // mm K/W * uJ/(mm K) = 1e-6 s
    return t_fail / (a_mm_K_per_W * (1.0 - std::exp(-t_p_s / tau)));
}

/// Shunt voltage seen for a given wire resistance: V+ R_s / (R_s + R_c + R_w).
inline double shunt_voltage(double supply, double shunt, double circuit, double wire) {
    return supply * shunt / (shunt + circuit + wire);
}

inline std::mt19937_64 seeded(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace tpp::test
