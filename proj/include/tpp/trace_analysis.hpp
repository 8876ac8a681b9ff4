#pragma once

// Reductions of measured or simulated traces under cyclic drive.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tpp/trace.hpp"
#include "tpp/units.hpp"

namespace tpp {

struct CyclicDecomposition {
    double offset;        ///< F0: mean over the analysis window
    double peak_to_peak;  ///< Fpp: mean over periods of (max - min)
    TimeWindow window;    ///< analysis window actually used
    std::size_t periods;
};

/// Splits a trace driven at `rate` into a slow offset and a pulse-synchronous
/// peak-to-peak component. The first `settle_periods` periods are skipped and
/// only complete periods after them are analysed.
CyclicDecomposition decompose_cyclic(const Trace& trace, units::Hertz rate, std::size_t settle_periods);

struct Spectrum {
    std::vector<double> frequency_Hz;
    /// One-sided amplitude spectrum: |X_0| / N at DC, 2 |X_k| / N in between,
    /// |X_{N/2}| / N at Nyquist. A sinusoid of amplitude A shows up as A.
    std::vector<double> magnitude;
    double bin_spacing_Hz = 0.0;
    std::size_t sample_count = 0;

    /// sum(x^2) reconstructed from the magnitudes (Parseval).
    [[nodiscard]] double energy() const;
    [[nodiscard]] std::size_t bin_of(double frequency_Hz) const;
};

struct SpectrumOptions {
    /// Single-pole high-pass, applied forward then backward. 0 disables it.
    double highpass_cutoff_Hz = 0.0;
    bool detrend = true;
};

Spectrum magnitude_spectrum(const Trace& trace, const SpectrumOptions& options);
Spectrum magnitude_spectrum(const Trace& trace, double highpass_cutoff_Hz);

/// Zero-phase single-pole high-pass (forward pass, then backward pass).
std::vector<double> highpass_filter(std::span<const double> x, double cutoff_Hz, double sample_period_s);

/// Removes the least-squares line.
std::vector<double> detrend(std::span<const double> x);

/// Local maxima whose topographic prominence is at least `min_prominence`.
/// Flat tops report their middle sample. Deterministic and O(n).
std::vector<std::size_t> find_peaks(std::span<const double> x, double min_prominence);

/// Prominence of each index in `peaks` (which must be local maxima).
std::vector<double> peak_prominences(std::span<const double> x, std::span<const std::size_t> peaks);

struct PeakGroup {
    std::size_t index;
    double mean;
};

struct PeakStats {
    std::vector<std::size_t> peak_indices;
    std::vector<PeakGroup> groups;
    std::size_t ungrouped = 0;  ///< trailing peaks that did not fill a group
    double prominence_threshold = 0.0;

    [[nodiscard]] double global_mean() const;
    [[nodiscard]] double max_relative_deviation() const;
};

/// Default prominence threshold: 10 % of the peak-to-peak range of the second
/// half of the trace.
double default_prominence(std::span<const double> x);

PeakStats peak_stats(const Trace& trace, std::size_t group_size,
                     std::optional<double> min_prominence = std::nullopt);

/// Maximum temperature rise over the window: max(sample) - first sample.
units::Kelvin surface_temp_stats(const Trace& temperature, TimeWindow window);

}  // namespace tpp
