#include "tpp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tpp/error.hpp"
#include "tpp/trace.hpp"

namespace tpp::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

struct Axis {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool log = false;

    double map(double v) const { return log ? std::log10(v) : v; }
    void include(double v) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) return;
        lo = std::min(lo, map(v));
        hi = std::max(hi, map(v));
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo <= 0.0) {
            const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
    double frac(double v) const { return (map(v) - lo) / (hi - lo); }
    double tick_value(double f) const {
        const double u = lo + f * (hi - lo);
        return log ? std::pow(10.0, u) : u;
    }
};

}  // namespace

std::string render(const Plot& plot) {
    Axis ax{.log = plot.log_x};
    Axis ay{.log = plot.log_y};
    for (const auto& s : plot.series) {
        if (s.x.size() != s.y.size()) throw ValidationError("plot series '" + s.name + "' has mismatched x and y");
        for (double v : s.x) ax.include(v);
        for (double v : s.y) ay.include(v);
    }
    ax.finish();
    ay.finish();
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

    std::ostringstream os;
    os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
       << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    os << R"(<text x=")" << kWidth / 2 << R"(" y="20" text-anchor="middle" font-size="14">)" << escape(plot.title)
       << "</text>\n";
    os << R"(<rect x=")" << kLeft << R"(" y=")" << kTop << R"(" width=")" << pw << R"(" height=")" << ph
       << R"(" fill="none" stroke="black"/>)" << '\n';
    for (int i = 0; i <= 4; ++i) {
        const double f = i / 4.0;
        const double x = kLeft + f * pw;
        const double y = kTop + (1.0 - f) * ph;
        os << R"(<text x=")" << fixed(x) << R"(" y=")" << fixed(kTop + ph + 16) << R"(" text-anchor="middle">)"
           << format_double(ax.tick_value(f)) << "</text>\n";
        os << R"(<text x=")" << fixed(kLeft - 6) << R"(" y=")" << fixed(y + 4) << R"(" text-anchor="end">)"
           << format_double(ay.tick_value(f)) << "</text>\n";
    }
    os << R"(<text x=")" << kLeft + pw / 2 << R"(" y=")" << kHeight - 10 << R"(" text-anchor="middle">)"
       << escape(plot.x_label) << "</text>\n";
    os << R"(<text x="14" y=")" << kTop + ph / 2 << R"(" text-anchor="middle" transform="rotate(-90 14 )"
       << kTop + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const std::size_t stride = std::max<std::size_t>(1, (s.x.size() + kMaxPlottedPoints - 1) / kMaxPlottedPoints);
        std::ostringstream xs, ys, pts;
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); i += stride) {
            if ((ax.log && !(s.x[i] > 0.0)) || (ay.log && !(s.y[i] > 0.0))) continue;
            if (!first) {
                xs << ' ';
                ys << ' ';
                pts << ' ';
            }
            first = false;
            xs << format_double(s.x[i]);
            ys << format_double(s.y[i]);
            pts << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i]));
        }
        const char* color = kColors[si % std::size(kColors)];
        os << R"(<g class="series" data-name=")" << escape(s.name) << R"(" data-stride=")" << stride
           << R"(" data-x=")" << xs.str() << R"(" data-y=")" << ys.str() << R"(">)" << '\n';
        if (s.markers) {
            std::istringstream in(pts.str());
            std::string p;
            while (in >> p) {
                const auto comma = p.find(',');
                os << R"(<circle cx=")" << p.substr(0, comma) << R"(" cy=")" << p.substr(comma + 1)
                   << R"(" r="2.5" fill=")" << color << R"("/>)" << '\n';
            }
        } else {
            os << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="1.5" points=")" << pts.str()
               << R"("/>)" << '\n';
        }
        os << "</g>\n";
        os << R"(<text x=")" << fixed(kLeft + pw - 8) << R"(" y=")" << fixed(kTop + 16 + 14.0 * si)
           << R"(" text-anchor="end" fill=")" << color << R"(">)" << escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::string& path, const Plot& plot) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write plot '" + path + "'");
    out << render(plot);
}

}  // namespace tpp::svg
