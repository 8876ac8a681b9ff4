#pragma once

// Psychophysical data reduction: magnitude-estimation normalization, the
// linear intensity/power model and its envelope-checked inverse, and
// localization-task statistics.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpp/core_physics.hpp"
#include "tpp/envelope.hpp"
#include "tpp/units.hpp"

namespace tpp {

struct MagnitudeRating {
    std::string participant;
    double power_W;
    double rating;
};

/// Raw magnitude-estimation ratings. Every participant must rate the same set
/// of power levels and give at least one positive rating.
class MagnitudeDataset {
public:
    explicit MagnitudeDataset(std::vector<MagnitudeRating> ratings);

    /// CSV with header `participant,power_W,rating`.
    static MagnitudeDataset read_csv(std::istream& in);
    static MagnitudeDataset read_csv_file(const std::string& path);

    [[nodiscard]] const std::vector<MagnitudeRating>& ratings() const { return ratings_; }
    [[nodiscard]] std::vector<std::string> participants() const;
    [[nodiscard]] std::vector<double> power_levels() const;

private:
    std::vector<MagnitudeRating> ratings_;
};

enum class ZeroRatingPolicy {
    /// Zeros are left out of the geometric mean and kept as zeros afterwards.
    exclude_from_geometric_mean,
    /// epsilon is added to every rating before normalization.
    add_epsilon,
};

struct ReductionOptions {
    ZeroRatingPolicy zeros = ZeroRatingPolicy::exclude_from_geometric_mean;
    double epsilon = 1e-3;
    /// Geometric-mean normalization makes the result scale-free. When set,
    /// the reduced intensities are rescaled so that their geometric mean
    /// across power levels equals this value.
    std::optional<double> modulus;
};

struct IntensityPoint {
    double power_W;
    double intensity;
    std::size_t count;  ///< normalized ratings pooled into this mean
};

struct MagnitudeReduction {
    std::vector<IntensityPoint> points;  ///< ascending power
    std::map<std::string, double> participant_geometric_mean;
    double modulus_scale = 1.0;
    static constexpr const char* kAveragingOrder =
        "normalize each rating by its participant's geometric mean, then take one arithmetic mean per power level "
        "over all participants and repetitions";
};

MagnitudeReduction reduce_magnitude(const MagnitudeDataset& dataset, const ReductionOptions& options = {});

/// I = alpha P_el + beta.
struct IntensityModel {
    static constexpr double kReferenceAlphaPerW = 0.2677;
    static constexpr double kReferenceBeta = -0.151;

    double alpha_per_W = kReferenceAlphaPerW;
    double beta = kReferenceBeta;
    double r_squared = 1.0;

    [[nodiscard]] double intensity_for_power(Watts power) const;
};

IntensityModel fit_intensity_model(std::span<const IntensityPoint> points);

/// P = (I - beta) / alpha. Throws ValidationError for alpha <= 0 or P <= 0.
Watts power_for_intensity(const IntensityModel& model, double target_intensity);

struct DriveContext {
    ActuatorGeometry geometry;
    Seconds pulse_duration;
    EnvelopeFit envelope = EnvelopeFit::reference();
    double margin = kDefaultSafetyMargin;
};

struct IntensityDrive {
    Watts power;
    WattsPerMeter rho;
    SafetyReport safety;
    /// Largest power that passes the envelope with the margin at this pulse duration.
    Watts max_safe_power;
    [[nodiscard]] bool drivable() const { return safety.safe; }
};

/// Maps the target through the model inverse, then checks the result against
/// the envelope. Unsafe results are returned with drivable() == false.
IntensityDrive power_for_intensity(const IntensityModel& model, double target_intensity, const DriveContext& context);

/// Envelope check of an explicit power.
IntensityDrive check_drive(Watts power, const DriveContext& context);

struct LocalizationTrial {
    std::string participant;
    int presented;  ///< 1-based site
    int reported;
};

inline constexpr int kLocalizationSites = 4;

struct LocalizationStats {
    std::size_t trials = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    /// confusion[presented - 1][reported - 1]
    std::vector<std::vector<std::size_t>> confusion;
    std::map<std::string, double> participant_accuracy;
};

LocalizationStats localization_stats(std::span<const LocalizationTrial> trials, int sites = kLocalizationSites);

/// CSV with header `participant,presented,reported`.
std::vector<LocalizationTrial> read_localization_csv(std::istream& in);
std::vector<LocalizationTrial> read_localization_csv_file(const std::string& path);

}  // namespace tpp
