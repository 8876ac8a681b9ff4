#pragma once

// Compile-time dimensional analysis for the SI quantities used throughout the
// toolkit. Every quantity stores its value in coherent SI units; literals and
// helper functions convert from mm, ms, degC and friends at the boundary.

#include <cmath>
#include <compare>

namespace tpp::units {

/// Exponents of the base dimensions: length, mass, time, current, temperature.
template <int L, int M, int T, int I, int K>
struct Dim {
    static constexpr int length = L;
    static constexpr int mass = M;
    static constexpr int time = T;
    static constexpr int current = I;
    static constexpr int temperature = K;
};

template <class A, class B>
using DimProduct = Dim<A::length + B::length, A::mass + B::mass, A::time + B::time,
                       A::current + B::current, A::temperature + B::temperature>;

template <class A, class B>
using DimQuotient = Dim<A::length - B::length, A::mass - B::mass, A::time - B::time,
                        A::current - B::current, A::temperature - B::temperature>;

template <class D>
class Quantity {
public:
    using dimension = D;

    constexpr Quantity() = default;
    constexpr explicit Quantity(double value) : value_(value) {}

    [[nodiscard]] constexpr double value() const { return value_; }

    constexpr Quantity& operator+=(Quantity o) { value_ += o.value_; return *this; }
    constexpr Quantity& operator-=(Quantity o) { value_ -= o.value_; return *this; }
    constexpr Quantity& operator*=(double s) { value_ *= s; return *this; }
    constexpr Quantity& operator/=(double s) { value_ /= s; return *this; }

    friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity(a.value_ + b.value_); }
    friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity(a.value_ - b.value_); }
    friend constexpr Quantity operator-(Quantity a) { return Quantity(-a.value_); }
    friend constexpr Quantity operator*(Quantity a, double s) { return Quantity(a.value_ * s); }
    friend constexpr Quantity operator*(double s, Quantity a) { return Quantity(s * a.value_); }
    friend constexpr Quantity operator/(Quantity a, double s) { return Quantity(a.value_ / s); }

    friend constexpr auto operator<=>(Quantity, Quantity) = default;

private:
    double value_ = 0.0;
};

template <class A, class B>
constexpr Quantity<DimProduct<A, B>> operator*(Quantity<A> a, Quantity<B> b) {
    return Quantity<DimProduct<A, B>>(a.value() * b.value());
}

template <class A, class B>
constexpr Quantity<DimQuotient<A, B>> operator/(Quantity<A> a, Quantity<B> b) {
    return Quantity<DimQuotient<A, B>>(a.value() / b.value());
}

template <class D>
constexpr Quantity<DimQuotient<Dim<0, 0, 0, 0, 0>, D>> operator/(double s, Quantity<D> q) {
    return Quantity<DimQuotient<Dim<0, 0, 0, 0, 0>, D>>(s / q.value());
}

template <class D>
constexpr Quantity<D> abs(Quantity<D> q) {
    return Quantity<D>(q.value() < 0.0 ? -q.value() : q.value());
}

using Dimensionless = Quantity<Dim<0, 0, 0, 0, 0>>;
using Meters = Quantity<Dim<1, 0, 0, 0, 0>>;
using SquareMeters = Quantity<Dim<2, 0, 0, 0, 0>>;
using CubicMeters = Quantity<Dim<3, 0, 0, 0, 0>>;
using Kilograms = Quantity<Dim<0, 1, 0, 0, 0>>;
using Seconds = Quantity<Dim<0, 0, 1, 0, 0>>;
using Hertz = Quantity<Dim<0, 0, -1, 0, 0>>;
using Amperes = Quantity<Dim<0, 0, 0, 1, 0>>;
using Kelvin = Quantity<Dim<0, 0, 0, 0, 1>>;
using Newtons = Quantity<Dim<1, 1, -2, 0, 0>>;
using Pascals = Quantity<Dim<-1, 1, -2, 0, 0>>;
using Joules = Quantity<Dim<2, 1, -2, 0, 0>>;
using Watts = Quantity<Dim<2, 1, -3, 0, 0>>;
using Volts = Quantity<Dim<2, 1, -3, -1, 0>>;
using Ohms = Quantity<Dim<2, 1, -3, -2, 0>>;

using WattsPerMeter = decltype(Watts{} / Meters{});
using KelvinPerWatt = decltype(Kelvin{} / Watts{});
using JoulesPerKelvin = decltype(Joules{} / Kelvin{});
using MetersPerNewton = decltype(Meters{} / Newtons{});
// Length-scaled thermal resistance and heat capacity of a heating wire.
using MeterKelvinPerWatt = decltype(Meters{} * Kelvin{} / Watts{});
using JoulesPerMeterKelvin = decltype(Joules{} / (Meters{} * Kelvin{}));

inline constexpr double kZeroCelsiusInKelvin = 273.15;

constexpr Kelvin celsius(double degrees) { return Kelvin(degrees + kZeroCelsiusInKelvin); }
constexpr double to_celsius(Kelvin t) { return t.value() - kZeroCelsiusInKelvin; }

constexpr Meters millimeters(double v) { return Meters(v * 1e-3); }
constexpr double to_millimeters(Meters m) { return m.value() * 1e3; }
constexpr Seconds milliseconds(double v) { return Seconds(v * 1e-3); }
constexpr double to_milliseconds(Seconds s) { return s.value() * 1e3; }
constexpr WattsPerMeter watts_per_millimeter(double v) { return WattsPerMeter(v * 1e3); }
constexpr double to_watts_per_millimeter(WattsPerMeter r) { return r.value() * 1e-3; }
constexpr MetersPerNewton millimeters_per_newton(double v) { return MetersPerNewton(v * 1e-3); }
constexpr double to_millimeters_per_newton(MetersPerNewton k) { return k.value() * 1e3; }
constexpr MeterKelvinPerWatt millimeter_kelvin_per_watt(double v) { return MeterKelvinPerWatt(v * 1e-3); }
constexpr double to_millimeter_kelvin_per_watt(MeterKelvinPerWatt a) { return a.value() * 1e3; }
// uJ/(mm K) -> J/(m K): 1e-6 / 1e-3
constexpr JoulesPerMeterKelvin microjoules_per_millimeter_kelvin(double v) { return JoulesPerMeterKelvin(v * 1e-3); }
constexpr double to_microjoules_per_millimeter_kelvin(JoulesPerMeterKelvin b) { return b.value() * 1e3; }

namespace literals {

constexpr Meters operator""_m(long double v) { return Meters(static_cast<double>(v)); }
constexpr Meters operator""_mm(long double v) { return millimeters(static_cast<double>(v)); }
constexpr Meters operator""_mm(unsigned long long v) { return millimeters(static_cast<double>(v)); }
constexpr Seconds operator""_s(long double v) { return Seconds(static_cast<double>(v)); }
constexpr Seconds operator""_s(unsigned long long v) { return Seconds(static_cast<double>(v)); }
constexpr Seconds operator""_ms(long double v) { return milliseconds(static_cast<double>(v)); }
constexpr Seconds operator""_ms(unsigned long long v) { return milliseconds(static_cast<double>(v)); }
constexpr Hertz operator""_Hz(long double v) { return Hertz(static_cast<double>(v)); }
constexpr Hertz operator""_Hz(unsigned long long v) { return Hertz(static_cast<double>(v)); }
constexpr Kelvin operator""_K(long double v) { return Kelvin(static_cast<double>(v)); }
constexpr Kelvin operator""_K(unsigned long long v) { return Kelvin(static_cast<double>(v)); }
constexpr Watts operator""_W(long double v) { return Watts(static_cast<double>(v)); }
constexpr Watts operator""_W(unsigned long long v) { return Watts(static_cast<double>(v)); }
constexpr Volts operator""_V(long double v) { return Volts(static_cast<double>(v)); }
constexpr Volts operator""_V(unsigned long long v) { return Volts(static_cast<double>(v)); }
constexpr Ohms operator""_ohm(long double v) { return Ohms(static_cast<double>(v)); }
constexpr Ohms operator""_ohm(unsigned long long v) { return Ohms(static_cast<double>(v)); }
constexpr Newtons operator""_N(long double v) { return Newtons(static_cast<double>(v)); }
constexpr Newtons operator""_N(unsigned long long v) { return Newtons(static_cast<double>(v)); }
constexpr Newtons operator""_mN(long double v) { return Newtons(static_cast<double>(v) * 1e-3); }
constexpr Newtons operator""_mN(unsigned long long v) { return Newtons(static_cast<double>(v) * 1e-3); }
constexpr Pascals operator""_Pa(long double v) { return Pascals(static_cast<double>(v)); }
constexpr Pascals operator""_Pa(unsigned long long v) { return Pascals(static_cast<double>(v)); }

}  // namespace literals

}  // namespace tpp::units
