#include "tpp/trace_analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "tpp/error.hpp"

namespace tpp {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> fft_magnitudes(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t bins = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(bins);
    std::copy(x.begin(), x.end(), in);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<double> mag(bins);
    for (std::size_t k = 0; k < bins; ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    fftw_free(in);
    return mag;
}

// For every i, the minimum of x strictly between i and the nearest index on
// the scanned side whose value is >= x[i] (or the array end).
template <class Index>
std::vector<double> side_minima(std::span<const double> x, Index order) {
    struct Entry {
        std::size_t idx;
        double gap_min;
    };
    const std::size_t n = x.size();
    std::vector<double> out(n);
    std::vector<Entry> stack;
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t i = order(step);
        double m = std::numeric_limits<double>::infinity();
        while (!stack.empty() && x[stack.back().idx] < x[i]) {
            m = std::min({m, stack.back().gap_min, x[stack.back().idx]});
            stack.pop_back();
        }
        out[i] = m;
        stack.push_back({i, m});
    }
    return out;
}

struct Plateau {
    std::size_t left;
    std::size_t right;
};

std::vector<Plateau> local_maxima(std::span<const double> x) {
    std::vector<Plateau> out;
    const std::size_t n = x.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (x[i] > x[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && x[j + 1] == x[i]) ++j;
            if (j + 1 < n && x[j + 1] < x[i]) out.push_back({i, j});
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

}  // namespace

CyclicDecomposition decompose_cyclic(const Trace& trace, units::Hertz rate, std::size_t settle_periods) {
    const double f = rate.value();
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("drive rate must be positive");
    const double dt = trace.sample_period();
    const double period = 1.0 / f;
    if (1.0 / dt < 20.0 * f * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "sample rate " << 1.0 / dt << " Hz is below the required 20 x drive rate = " << 20.0 * f << " Hz";
        throw ValidationError(os.str());
    }
    const std::size_t n = trace.size();
    const double covered = static_cast<double>(n) * dt;
    const double required = static_cast<double>(settle_periods + 3) * period;
    if (covered < required * (1.0 - 1e-9)) {
        std::ostringstream os;
        os << "trace covers " << covered << " s; at least " << required << " s (" << settle_periods + 3
           << " periods) are required";
        throw ValidationError(os.str());
    }

    const double settle = static_cast<double>(settle_periods) * period;
    const auto periods = static_cast<std::size_t>(std::floor((covered - settle) / period + 1e-9));
    std::vector<double> lo(periods, std::numeric_limits<double>::infinity());
    std::vector<double> hi(periods, -std::numeric_limits<double>::infinity());
    double sum = 0.0;
    std::size_t count = 0;
    const auto& x = trace.samples();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt - settle;
        if (t < -1e-9 * dt) continue;
        const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / period + 1e-9)));
        if (k >= periods) break;
        lo[k] = std::min(lo[k], x[i]);
        hi[k] = std::max(hi[k], x[i]);
        sum += x[i];
        ++count;
    }
    double pp = 0.0;
    for (std::size_t k = 0; k < periods; ++k) pp += hi[k] - lo[k];

    CyclicDecomposition out;
    out.offset = sum / static_cast<double>(count);
    out.peak_to_peak = pp / static_cast<double>(periods);
    out.periods = periods;
    out.window = {trace.start_time() + settle, trace.start_time() + settle + static_cast<double>(periods) * period};
    return out;
}

double Spectrum::energy() const {
    if (magnitude.empty()) return 0.0;
    const double n = static_cast<double>(sample_count);
    double e = magnitude.front() * magnitude.front();
    const bool has_nyquist = sample_count % 2 == 0;
    const std::size_t last = magnitude.size() - 1;
    for (std::size_t k = 1; k < magnitude.size(); ++k) {
        const double m2 = magnitude[k] * magnitude[k];
        e += (k == last && has_nyquist) ? m2 : 0.5 * m2;
    }
    return n * e;
}

std::size_t Spectrum::bin_of(double f) const {
    const auto k = static_cast<std::size_t>(std::llround(f / bin_spacing_Hz));
    return std::min(k, magnitude.size() - 1);
}

std::vector<double> detrend(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> out(x.begin(), x.end());
    if (n < 2) {
        for (auto& v : out) v = 0.0;
        return out;
    }
    const double mt = 0.5 * static_cast<double>(n - 1);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - mt;
        stt += dt * dt;
        stx += dt * (x[i] - mx);
    }
    const double slope = stx / stt;
    for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mx) - slope * (static_cast<double>(i) - mt);
    return out;
}

std::vector<double> highpass_filter(std::span<const double> x, double cutoff_Hz, double sample_period_s) {
    if (!(cutoff_Hz > 0.0)) throw ValidationError("high-pass cutoff must be positive");
    const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_Hz);
    const double alpha = rc / (rc + sample_period_s);
    const std::size_t n = x.size();
    std::vector<double> y(n);
    if (n == 0) return y;
    y[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) y[i] = alpha * (y[i - 1] + x[i] - x[i - 1]);
    std::vector<double> z(n);
    z[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) z[i] = alpha * (z[i + 1] + y[i] - y[i + 1]);
    return z;
}

Spectrum magnitude_spectrum(const Trace& trace, const SpectrumOptions& options) {
    const std::size_t n = trace.size();
    if (n < 64) {
        throw ValidationError("magnitude spectrum needs at least 64 samples (got " + std::to_string(n) + ")");
    }
    std::vector<double> x = options.detrend ? detrend(trace.samples()) : trace.samples();
    if (options.highpass_cutoff_Hz > 0.0) x = highpass_filter(x, options.highpass_cutoff_Hz, trace.sample_period());

    Spectrum s;
    s.sample_count = n;
    s.bin_spacing_Hz = 1.0 / (static_cast<double>(n) * trace.sample_period());
    s.magnitude = fft_magnitudes(x);
    s.frequency_Hz.resize(s.magnitude.size());
    const double scale = 1.0 / static_cast<double>(n);
    const std::size_t last = s.magnitude.size() - 1;
    for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
        s.frequency_Hz[k] = static_cast<double>(k) * s.bin_spacing_Hz;
        const bool edge = k == 0 || (k == last && n % 2 == 0);
        s.magnitude[k] *= edge ? scale : 2.0 * scale;
    }
    return s;
}

Spectrum magnitude_spectrum(const Trace& trace, double highpass_cutoff_Hz) {
    return magnitude_spectrum(trace, SpectrumOptions{highpass_cutoff_Hz, true});
}

std::vector<double> peak_prominences(std::span<const double> x, std::span<const std::size_t> peaks) {
    const std::size_t n = x.size();
    const auto left = side_minima(x, [](std::size_t s) { return s; });
    const auto right = side_minima(x, [n](std::size_t s) { return n - 1 - s; });
    std::vector<double> out;
    out.reserve(peaks.size());
    for (std::size_t p : peaks) {
        // Walk to the plateau edges so equal neighbours do not stop the search.
        std::size_t l = p;
        while (l > 0 && x[l - 1] == x[p]) --l;
        std::size_t r = p;
        while (r + 1 < n && x[r + 1] == x[p]) ++r;
        out.push_back(x[p] - std::max(left[l], right[r]));
    }
    return out;
}

std::vector<std::size_t> find_peaks(std::span<const double> x, double min_prominence) {
    const auto plateaus = local_maxima(x);
    std::vector<std::size_t> candidates;
    candidates.reserve(plateaus.size());
    for (const auto& p : plateaus) candidates.push_back(p.left + (p.right - p.left) / 2);
    const auto prom = peak_prominences(x, candidates);
    std::vector<std::size_t> out;
    out.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (prom[i] >= min_prominence) out.push_back(candidates[i]);
    }
    return out;
}

double default_prominence(std::span<const double> x) {
    const auto half = x.subspan(x.size() / 2);
    const auto [lo, hi] = std::minmax_element(half.begin(), half.end());
    return 0.1 * (*hi - *lo);
}

double PeakStats::global_mean() const {
    if (groups.empty()) return 0.0;
    double s = 0.0;
    for (const auto& g : groups) s += g.mean;
    return s / static_cast<double>(groups.size());
}

double PeakStats::max_relative_deviation() const {
    const double mean = global_mean();
    double worst = 0.0;
    for (const auto& g : groups) worst = std::max(worst, std::abs(g.mean - mean) / std::abs(mean));
    return worst;
}

PeakStats peak_stats(const Trace& trace, std::size_t group_size, std::optional<double> min_prominence) {
    if (group_size == 0) throw ValidationError("peak group size must be at least 1");
    const auto& x = trace.samples();
    PeakStats stats;
    stats.prominence_threshold = min_prominence ? *min_prominence : default_prominence(x);
    if (!(stats.prominence_threshold > 0.0)) {
        throw ValidationError("no detectable peaks: the trace has no peak-to-peak variation");
    }
    stats.peak_indices = find_peaks(x, stats.prominence_threshold);
    if (stats.peak_indices.empty()) {
        throw ValidationError("no peaks reach the prominence threshold " + format_double(stats.prominence_threshold));
    }
    const std::size_t full = stats.peak_indices.size() / group_size;
    stats.groups.reserve(full);
    for (std::size_t g = 0; g < full; ++g) {
        double s = 0.0;
        for (std::size_t j = 0; j < group_size; ++j) s += x[stats.peak_indices[g * group_size + j]];
        stats.groups.push_back({g, s / static_cast<double>(group_size)});
    }
    stats.ungrouped = stats.peak_indices.size() - full * group_size;
    return stats;
}

units::Kelvin surface_temp_stats(const Trace& temperature, TimeWindow window) {
    temperature.require_kind(QuantityKind::temperature, "surface_temp_stats");
    const Trace w = temperature.slice(window);
    const auto& x = w.samples();
    return units::Kelvin(*std::max_element(x.begin(), x.end()) - x.front());
}

}  // namespace tpp
