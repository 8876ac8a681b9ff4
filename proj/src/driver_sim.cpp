#include "tpp/driver_sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <set>
#include <sstream>

#include "tpp/error.hpp"

namespace tpp {

namespace {

constexpr double kUsPerSecond = 1e6;

Seconds from_us(std::int64_t us) { return Seconds(static_cast<double>(us) / kUsPerSecond); }

std::int64_t to_us(double seconds, const char* what) {
    const double us = seconds * kUsPerSecond;
    if (!std::isfinite(us) || us < 0.0 || us > 9e15) {
        throw ValidationError(std::string(what) + " must be a finite, non-negative time");
    }
    return std::llround(us);
}

Watts channel_power(const PatternCommand& c, const ChannelConfig& ch) {
    if (c.power) return *c.power;
    return electrical_power(ElectricalDrive(*c.voltage, ch.wire_resistance));
}

struct Interval {
    std::int64_t begin;
    std::int64_t end;
    std::size_t command;
};

}  // namespace

std::string_view to_string(ModuleKind kind) { return kind == ModuleKind::single ? "single" : "quartet"; }

ModuleKind parse_module_kind(std::string_view name) {
    if (name == "single") return ModuleKind::single;
    if (name == "quartet") return ModuleKind::quartet;
    throw ValidationError("module kind must be 'single' or 'quartet', got '" + std::string(name) + "'");
}

std::size_t channel_count(ModuleKind kind) { return kind == ModuleKind::single ? 1 : 4; }

Board::Board(std::vector<ModuleConfig> modules) : modules_(std::move(modules)) {
    if (modules_.size() > static_cast<std::size_t>(ModuleConfig::kMaxModules)) {
        throw ValidationError("a board holds at most 10 modules (got " + std::to_string(modules_.size()) + ")");
    }
    std::set<int> module_ids;
    for (std::size_t m = 0; m < modules_.size(); ++m) {
        const auto& mod = modules_[m];
        const std::string where = "module " + std::to_string(mod.id);
        if (mod.id < 0 || mod.id >= ModuleConfig::kMaxModules) throw ValidationError(where + ": id must be 0-9");
        if (!module_ids.insert(mod.id).second) throw ValidationError(where + ": duplicate module id");
        const std::size_t expected = channel_count(mod.kind);
        if (mod.channels.size() != expected) {
            throw ValidationError(where + ": a " + std::string(to_string(mod.kind)) + " module exposes " +
                                  std::to_string(expected) + " channel(s), got " +
                                  std::to_string(mod.channels.size()));
        }
        std::set<int> pins;
        for (std::size_t c = 0; c < mod.channels.size(); ++c) {
            const auto& ch = mod.channels[c];
            if (ch.pin < 0 || ch.pin >= static_cast<int>(expected) || !pins.insert(ch.pin).second) {
                throw ValidationError(where + ": channel " + std::to_string(ch.channel) + " has invalid pin " +
                                      std::to_string(ch.pin));
            }
            if (!(ch.wire_resistance.value() > 0.0)) {
                throw ValidationError(where + ": channel " + std::to_string(ch.channel) +
                                      " needs a positive wire resistance");
            }
            if (!index_.emplace(ch.channel, std::pair{m, c}).second) {
                throw ValidationError("channel " + std::to_string(ch.channel) + " is defined twice");
            }
        }
    }
    if (index_.size() > kMaxChannels) throw ValidationError("a board holds at most 40 channels");
}

const ChannelConfig& Board::channel(int id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown channel " + std::to_string(id));
    return modules_[it->second.first].channels[it->second.second];
}

int Board::module_of(int channel) const {
    const auto it = index_.find(channel);
    if (it == index_.end()) throw ValidationError("unknown channel " + std::to_string(channel));
    return modules_[it->second.first].id;
}

std::vector<int> Board::channel_ids() const {
    std::vector<int> ids;
    for (const auto& [id, _] : index_) ids.push_back(id);
    return ids;
}

CommandTiming command_timing(const PatternCommand& c) {
    const double f = c.rate.value();
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("pulse rate must be positive");
    if (!(c.duty > 0.0 && c.duty < 1.0)) throw ValidationError("duty must lie strictly between 0 and 1");
    if (!(c.duration.value() >= 0.0)) throw ValidationError("command duration must be non-negative");
    CommandTiming t{};
    t.start_us = to_us(c.start.value(), "command start");
    t.duration_us = to_us(c.duration.value(), "command duration");
    t.period_us = std::llround(kUsPerSecond / f);
    t.pulse_us = std::llround(c.duty * kUsPerSecond / f);
    if (t.pulse_us < kMinPulseUs || t.pulse_us > kMaxPulseUs) {
        std::ostringstream os;
        os << "pulse duration " << static_cast<double>(t.pulse_us) / 1e3
           << " ms (duty / rate) is outside the supported 0.5-100 ms range";
        throw ValidationError(os.str());
    }
    if (t.pulse_us >= t.period_us) throw ValidationError("pulse fills the whole period after rounding to 1 us");
    t.count = static_cast<std::int64_t>(std::floor(c.duration.value() * f + 1e-9));
    return t;
}

GateEventLog compile_pattern(std::span<const PatternCommand> commands, const Board& board, const EnvelopeFit& fit,
                             double margin) {
    GateEventLog log;
    std::map<int, std::vector<Interval>> busy;
    for (std::size_t ci = 0; ci < commands.size(); ++ci) {
        const auto& c = commands[ci];
        const std::string where = "command " + std::to_string(ci);
        if (c.power.has_value() == c.voltage.has_value()) {
            throw ValidationError(where + ": give exactly one of power and voltage");
        }
        if (c.power && !(c.power->value() >= 0.0)) throw ValidationError(where + ": power must be non-negative");
        if (c.channels.empty()) throw ValidationError(where + ": no channels");
        const CommandTiming t = command_timing(c);
        const std::int64_t last_off = t.start_us + (t.count - 1) * t.period_us + t.pulse_us;
        const Interval window{t.start_us, std::max(t.start_us + t.duration_us, last_off + 1), ci};

        std::set<int> seen;
        for (int id : c.channels) {
            if (!seen.insert(id).second) {
                throw ValidationError(where + ": channel " + std::to_string(id) + " listed twice");
            }
            const ChannelConfig& ch = board.channel(id);
            for (const auto& other : busy[id]) {
                if (window.begin < other.end && other.begin < window.end) {
                    throw ValidationError(where + " overlaps command " + std::to_string(other.command) +
                                          " on channel " + std::to_string(id));
                }
            }
            busy[id].push_back(window);

            const Watts power = channel_power(c, ch);
            const WattsPerMeter rho = power_per_length(power, ch.geometry);
            const SafetyReport report = is_safe(fit, rho, from_us(t.pulse_us), margin);
            if (!report.safe) {
                throw SafetyError(where + ", channel " + std::to_string(id) + ": " + describe_violation(fit, report));
            }

            auto& led = log.ledger[id];
            led.pulses += t.count;
            led.on_time_us += t.pulse_us * t.count;
            led.energy_uJ += power.value() * static_cast<double>(t.pulse_us * t.count);
            for (std::int64_t k = 0; k < t.count; ++k) {
                const std::int64_t on = t.start_us + k * t.period_us;
                log.events.push_back({on, id, true, power.value()});
                log.events.push_back({on + t.pulse_us, id, false, power.value()});
            }
        }
    }
    std::sort(log.events.begin(), log.events.end(), [](const GateEvent& a, const GateEvent& b) {
        return a.time_us != b.time_us ? a.time_us < b.time_us : a.channel < b.channel;
    });
    return log;
}

LogVerification verify_log(const GateEventLog& log, const Board& board, const EnvelopeFit& fit, double margin) {
    LogVerification v;
    auto problem = [&](std::size_t i, const std::string& what) {
        v.problems.push_back("event " + std::to_string(i) + ": " + what);
    };
    std::map<int, const GateEvent*> open;
    std::map<int, ChannelLedger> recount;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const GateEvent& e = log.events[i];
        if (i > 0) {
            const GateEvent& p = log.events[i - 1];
            if (!(p.time_us < e.time_us || (p.time_us == e.time_us && p.channel < e.channel))) {
                problem(i, "not strictly after the previous event in (time, channel) order");
            }
        }
        if (!board.has_channel(e.channel)) {
            problem(i, "unknown channel " + std::to_string(e.channel));
            continue;
        }
        auto it = open.find(e.channel);
        if (e.on) {
            if (it != open.end()) problem(i, "channel " + std::to_string(e.channel) + " switched on twice");
            open[e.channel] = &e;
            continue;
        }
        if (it == open.end()) {
            problem(i, "channel " + std::to_string(e.channel) + " switched off while off");
            continue;
        }
        const GateEvent& on = *it->second;
        open.erase(it);
        const std::int64_t width = e.time_us - on.time_us;
        auto& led = recount[e.channel];
        ++led.pulses;
        led.on_time_us += width;
        led.energy_uJ += on.power_W * static_cast<double>(width);
        ++v.pulses_checked;
        const auto& ch = board.channel(e.channel);
        const SafetyReport r = is_safe(fit, power_per_length(Watts(on.power_W), ch.geometry), from_us(width), margin);
        if (!r.safe) problem(i, "channel " + std::to_string(e.channel) + ": " + describe_violation(fit, r));
    }
    for (const auto& [ch, e] : open) v.problems.push_back("channel " + std::to_string(ch) + " left on at end of log");
    for (const auto& [ch, led] : log.ledger) {
        const auto it = recount.find(ch);
        const ChannelLedger actual = it == recount.end() ? ChannelLedger{} : it->second;
        if (actual.pulses != led.pulses || actual.on_time_us != led.on_time_us) {
            v.problems.push_back("channel " + std::to_string(ch) + ": ledger disagrees with the events");
        }
        // Energy is accumulated per pulse here and per command in the ledger.
        if (std::abs(actual.energy_uJ - led.energy_uJ) > 1e-9 * std::max(1.0, led.energy_uJ)) {
            v.problems.push_back("channel " + std::to_string(ch) + ": ledger energy disagrees with the events");
        }
    }
    return v;
}

PulseSchedule channel_schedule(const GateEventLog& log, int channel) {
    std::vector<PulseSegment> segments;
    std::int64_t on_us = -1;
    double power = 0.0;
    for (const auto& e : log.events) {
        if (e.channel != channel) continue;
        if (e.on) {
            on_us = e.time_us;
            power = e.power_W;
        } else {
            segments.push_back({from_us(on_us), from_us(e.time_us - on_us), Watts(power)});
        }
    }
    return PulseSchedule(std::move(segments));
}

std::map<int, SimTrace> simulate_pattern(const GateEventLog& log, const std::map<int, ThermalModel>& models,
                                         Seconds sample_period, std::optional<Seconds> t_end) {
    std::set<int> channels;
    for (const auto& e : log.events) channels.insert(e.channel);
    for (int ch : channels) {
        if (models.count(ch) == 0) throw ValidationError("no thermal model for channel " + std::to_string(ch));
    }
    const Seconds end = t_end.value_or(from_us(log.end_us()));
    std::vector<std::pair<int, std::future<SimTrace>>> jobs;
    for (int ch : channels) {
        jobs.emplace_back(ch, std::async(std::launch::async, [&, ch] {
                              return simulate(models.at(ch), channel_schedule(log, ch), end, sample_period);
                          }));
    }
    std::map<int, SimTrace> out;
    for (auto& [ch, job] : jobs) out.emplace(ch, job.get());
    return out;
}

BoardReport board_report(const GateEventLog& log, const Board& board) {
    BoardReport r;
    std::vector<const GateEvent*> order;
    order.reserve(log.events.size());
    for (const auto& e : log.events) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [](const GateEvent* a, const GateEvent* b) {
        return a->time_us != b->time_us ? a->time_us < b->time_us : (!a->on && b->on);
    });
    std::map<int, double> active;
    std::size_t i = 0;
    while (i < order.size()) {
        const std::int64_t t = order[i]->time_us;
        for (; i < order.size() && order[i]->time_us == t; ++i) {
            const GateEvent& e = *order[i];
            if (e.on) {
                active[e.channel] = e.power_W;
            } else {
                active.erase(e.channel);
            }
        }
        double draw = 0.0;
        for (const auto& [_, p] : active) draw += p;
        if (active.size() > r.peak_active_channels) r.peak_active_channels = active.size();
        if (draw > r.peak_power.value()) {
            r.peak_power = Watts(draw);
            r.peak_power_time_us = t;
        }
    }
    for (const auto& m : board.modules()) r.module_energy_J[m.id] = 0.0;
    for (const auto& [ch, led] : log.ledger) {
        r.module_energy_J[board.module_of(ch)] += led.energy_J();
        r.total_energy_J += led.energy_J();
    }
    return r;
}

void write_gate_log_csv(std::ostream& out, const GateEventLog& log) {
    out << "time_us,channel,state\n";
    for (const auto& e : log.events) out << e.time_us << ',' << e.channel << ',' << (e.on ? "on" : "off") << '\n';
}

}  // namespace tpp
