#pragma once

// Minimal deterministic SVG line plots. Every series carries its data values
// in `data-x` / `data-y` attributes so tests can compare plotted values
// without rasterizing.

#include <string>
#include <vector>

namespace tpp::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  ///< dots instead of a polyline
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
};

/// Series longer than this are decimated by stride before plotting.
inline constexpr std::size_t kMaxPlottedPoints = 4000;

std::string render(const Plot& plot);
void write_file(const std::string& path, const Plot& plot);

}  // namespace tpp::svg
