#include "tpp/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "tpp/calibration.hpp"
#include "tpp/error.hpp"

namespace tpp {

MagnitudeDataset::MagnitudeDataset(std::vector<MagnitudeRating> ratings) : ratings_(std::move(ratings)) {
    if (ratings_.empty()) throw ValidationError("magnitude dataset has no ratings");
    std::map<std::string, std::set<double>> levels;
    std::map<std::string, bool> any_positive;
    for (const auto& r : ratings_) {
        if (!(r.power_W > 0.0) || !std::isfinite(r.power_W)) {
            throw ValidationError("participant " + r.participant + ": power level must be positive");
        }
        if (!(r.rating >= 0.0) || !std::isfinite(r.rating)) {
            throw ValidationError("participant " + r.participant + ": ratings must be non-negative");
        }
        levels[r.participant].insert(r.power_W);
        any_positive[r.participant] = any_positive[r.participant] || r.rating > 0.0;
    }
    for (const auto& [p, positive] : any_positive) {
        if (!positive) throw ValidationError("participant " + p + " has only zero ratings");
    }
    const auto& reference = levels.begin()->second;
    for (const auto& [p, set] : levels) {
        if (set != reference) {
            throw ValidationError("participant " + p + " does not rate the same power levels as " +
                                  levels.begin()->first);
        }
    }
}

MagnitudeDataset MagnitudeDataset::read_csv(std::istream& in) {
    std::vector<MagnitudeRating> rows;
    csv::for_each_row(in, {"participant", "power_W", "rating"}, [&](const auto& cells, std::size_t line) {
        rows.push_back({cells[0], csv::parse_double(cells[1], line), csv::parse_double(cells[2], line)});
    });
    return MagnitudeDataset(std::move(rows));
}

MagnitudeDataset MagnitudeDataset::read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open magnitude data file '" + path + "'");
    return read_csv(in);
}

std::vector<std::string> MagnitudeDataset::participants() const {
    std::set<std::string> s;
    for (const auto& r : ratings_) s.insert(r.participant);
    return {s.begin(), s.end()};
}

std::vector<double> MagnitudeDataset::power_levels() const {
    std::set<double> s;
    for (const auto& r : ratings_) s.insert(r.power_W);
    return {s.begin(), s.end()};
}

MagnitudeReduction reduce_magnitude(const MagnitudeDataset& dataset, const ReductionOptions& options) {
    const bool add_eps = options.zeros == ZeroRatingPolicy::add_epsilon;
    if (add_eps && !(options.epsilon > 0.0)) throw ValidationError("zero-rating epsilon must be positive");
    if (options.modulus && !(*options.modulus > 0.0)) throw ValidationError("modulus must be positive");
    const double shift = add_eps ? options.epsilon : 0.0;

    struct LogSum {
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, LogSum> logs;
    for (const auto& r : dataset.ratings()) {
        const double v = r.rating + shift;
        if (v > 0.0) {
            logs[r.participant].sum += std::log(v);
            ++logs[r.participant].n;
        }
    }
    MagnitudeReduction out;
    for (const auto& [p, l] : logs) out.participant_geometric_mean[p] = std::exp(l.sum / static_cast<double>(l.n));

    std::map<double, std::pair<double, std::size_t>> pooled;
    for (const auto& r : dataset.ratings()) {
        auto& acc = pooled[r.power_W];
        acc.first += (r.rating + shift) / out.participant_geometric_mean.at(r.participant);
        ++acc.second;
    }
    for (const auto& [power, acc] : pooled) {
        out.points.push_back({power, acc.first / static_cast<double>(acc.second), acc.second});
    }

    if (options.modulus) {
        double log_sum = 0.0;
        for (const auto& p : out.points) {
            if (!(p.intensity > 0.0)) {
                throw ValidationError("modulus rescaling needs a positive reduced intensity at every power level");
            }
            log_sum += std::log(p.intensity);
        }
        const double gm = std::exp(log_sum / static_cast<double>(out.points.size()));
        out.modulus_scale = *options.modulus / gm;
        for (auto& p : out.points) p.intensity *= out.modulus_scale;
    }
    return out;
}

double IntensityModel::intensity_for_power(Watts power) const { return alpha_per_W * power.value() + beta; }

IntensityModel fit_intensity_model(std::span<const IntensityPoint> points) {
    std::vector<double> x, y;
    x.reserve(points.size());
    y.reserve(points.size());
    for (const auto& p : points) {
        x.push_back(p.power_W);
        y.push_back(p.intensity);
    }
    const RegressionFit fit = linear_fit(x, y, FitSpace::linear);
    return IntensityModel{fit.slope, fit.intercept, fit.r_squared};
}

Watts power_for_intensity(const IntensityModel& model, double target_intensity) {
    if (!(model.alpha_per_W > 0.0)) {
        throw ValidationError("intensity model slope must be positive to invert (alpha = " +
                              format_double(model.alpha_per_W) + ")");
    }
    const double p = (target_intensity - model.beta) / model.alpha_per_W;
    if (!(p > 0.0)) {
        throw ValidationError("target intensity " + format_double(target_intensity) +
                              " is at or below the model intercept " + format_double(model.beta) +
                              "; the required power would be non-positive");
    }
    return Watts(p);
}

IntensityDrive check_drive(Watts power, const DriveContext& context) {
    const WattsPerMeter rho = power_per_length(power, context.geometry);
    IntensityDrive d{power, rho, is_safe(context.envelope, rho, context.pulse_duration, context.margin), Watts(0.0)};
    d.max_safe_power = d.safety.allowed * context.geometry.wire_length();
    return d;
}

IntensityDrive power_for_intensity(const IntensityModel& model, double target_intensity, const DriveContext& context) {
    return check_drive(power_for_intensity(model, target_intensity), context);
}

LocalizationStats localization_stats(std::span<const LocalizationTrial> trials, int sites) {
    if (sites < 1) throw ValidationError("localization grid needs at least one site");
    if (trials.empty()) throw ValidationError("localization log is empty");
    LocalizationStats s;
    const auto n = static_cast<std::size_t>(sites);
    s.confusion.assign(n, std::vector<std::size_t>(n, 0));
    std::map<std::string, std::pair<std::size_t, std::size_t>> per;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        if (t.presented < 1 || t.presented > sites || t.reported < 1 || t.reported > sites) {
            std::ostringstream os;
            os << "trial " << i << " (participant " << t.participant << "): site out of range 1.." << sites;
            throw ValidationError(os.str());
        }
        ++s.confusion[static_cast<std::size_t>(t.presented - 1)][static_cast<std::size_t>(t.reported - 1)];
        auto& p = per[t.participant];
        ++p.second;
        if (t.presented == t.reported) {
            ++s.correct;
            ++p.first;
        }
    }
    s.trials = trials.size();
    s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.trials);
    for (const auto& [id, c] : per) {
        s.participant_accuracy[id] = static_cast<double>(c.first) / static_cast<double>(c.second);
    }
    return s;
}

std::vector<LocalizationTrial> read_localization_csv(std::istream& in) {
    std::vector<LocalizationTrial> rows;
    csv::for_each_row(in, {"participant", "presented", "reported"}, [&](const auto& cells, std::size_t line) {
        rows.push_back({cells[0], static_cast<int>(csv::parse_integer(cells[1], line)),
                        static_cast<int>(csv::parse_integer(cells[2], line))});
    });
    return rows;
}

std::vector<LocalizationTrial> read_localization_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open localization log '" + path + "'");
    return read_localization_csv(in);
}

}  // namespace tpp
