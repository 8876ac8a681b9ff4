#pragma once

// Virtual driver board: up to ten modules of one or four low-side gated
// channels. Tactile patterns compile into a gate-event timeline on an integer
// microsecond clock, gated by the thermal envelope.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpp/core_physics.hpp"
#include "tpp/envelope.hpp"
#include "tpp/thermal_sim.hpp"
#include "tpp/units.hpp"

namespace tpp {

enum class ModuleKind { single, quartet };

std::string_view to_string(ModuleKind kind);
ModuleKind parse_module_kind(std::string_view name);
std::size_t channel_count(ModuleKind kind);

struct ChannelConfig {
    int channel;  ///< board-wide id
    int pin;      ///< position within the module, 0-based
    ActuatorGeometry geometry;
    Ohms wire_resistance;
};

struct ModuleConfig {
    static constexpr int kMaxModules = 10;

    int id;
    ModuleKind kind;
    std::vector<ChannelConfig> channels;
};

/// Channel lookup over a validated set of modules.
class Board {
public:
    static constexpr std::size_t kMaxChannels = 40;

    explicit Board(std::vector<ModuleConfig> modules);

    [[nodiscard]] const std::vector<ModuleConfig>& modules() const { return modules_; }
    [[nodiscard]] const ChannelConfig& channel(int id) const;
    [[nodiscard]] int module_of(int channel) const;
    [[nodiscard]] bool has_channel(int id) const { return index_.count(id) != 0; }
    [[nodiscard]] std::vector<int> channel_ids() const;

private:
    std::vector<ModuleConfig> modules_;
    std::map<int, std::pair<std::size_t, std::size_t>> index_;
};

inline constexpr std::int64_t kMinPulseUs = 500;
inline constexpr std::int64_t kMaxPulseUs = 100'000;

struct PatternCommand {
    std::vector<int> channels;
    Hertz rate;
    double duty;  ///< t_p / period, in (0, 1)
    Seconds duration;
    Seconds start{0.0};
    /// Exactly one of power and voltage is set. A voltage is converted per
    /// channel through that channel's wire resistance.
    std::optional<Watts> power;
    std::optional<Volts> voltage;
};

/// Command timing on the microsecond clock.
struct CommandTiming {
    std::int64_t start_us;
    std::int64_t period_us;
    std::int64_t pulse_us;
    std::int64_t duration_us;
    std::int64_t count;  ///< floor(duration * rate); partial trailing periods emit nothing
};

CommandTiming command_timing(const PatternCommand& command);

struct GateEvent {
    std::int64_t time_us;
    int channel;
    bool on;
    double power_W;  ///< drive power while on; repeated on the matching off event

    bool operator==(const GateEvent&) const = default;
};

struct ChannelLedger {
    std::int64_t on_time_us = 0;
    std::int64_t pulses = 0;
    double energy_uJ = 0.0;  ///< sum over commands of P * (t_p_us * count)

    [[nodiscard]] double energy_J() const { return energy_uJ * 1e-6; }
    bool operator==(const ChannelLedger&) const = default;
};

struct GateEventLog {
    std::vector<GateEvent> events;  ///< strictly ordered by (time, channel)
    std::map<int, ChannelLedger> ledger;

    [[nodiscard]] bool empty() const { return events.empty(); }
    [[nodiscard]] std::int64_t end_us() const { return events.empty() ? 0 : events.back().time_us; }
    bool operator==(const GateEventLog&) const = default;
};

/// Throws ValidationError for unknown channels, malformed or overlapping
/// commands and SafetyError for the first pulse outside the envelope.
GateEventLog compile_pattern(std::span<const PatternCommand> commands, const Board& board, const EnvelopeFit& fit,
                             double margin = kDefaultSafetyMargin);

struct LogVerification {
    std::size_t pulses_checked = 0;
    std::vector<std::string> problems;
    [[nodiscard]] bool ok() const { return problems.empty(); }
};

/// Re-checks a log from its events alone: ordering, on/off alternation
/// starting from off, every pulse against the envelope, and the ledger.
LogVerification verify_log(const GateEventLog& log, const Board& board, const EnvelopeFit& fit,
                           double margin = kDefaultSafetyMargin);

/// The pulses of one channel as a thermal schedule.
PulseSchedule channel_schedule(const GateEventLog& log, int channel);

/// Per-channel simulation, run concurrently and merged by channel id. The
/// default end time is the last event of the log.
std::map<int, SimTrace> simulate_pattern(const GateEventLog& log, const std::map<int, ThermalModel>& models,
                                         Seconds sample_period, std::optional<Seconds> t_end = std::nullopt);

struct BoardReport {
    std::size_t peak_active_channels = 0;
    Watts peak_power{0.0};
    std::int64_t peak_power_time_us = 0;
    std::map<int, double> module_energy_J;
    double total_energy_J = 0.0;
};

/// Event-driven: at equal time stamps, off events apply before on events.
BoardReport board_report(const GateEventLog& log, const Board& board);

/// `time_us,channel,state` with state `on` or `off`.
void write_gate_log_csv(std::ostream& out, const GateEventLog& log);

}  // namespace tpp
