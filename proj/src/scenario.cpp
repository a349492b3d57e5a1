#include "partner/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "partner/random.hpp"

namespace partner {

namespace {

std::vector<std::string_view> split_words(std::string_view line) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) words.push_back(line.substr(start, i - start));
    }
    return words;
}

double number(std::string_view word, std::size_t line, const char* what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
    if (ec != std::errc{} || ptr != word.data() + word.size() || !std::isfinite(value)) {
        throw ScenarioError(std::string("bad ") + what + " '" + std::string(word) + "'", line);
    }
    return value;
}

double unit(std::string_view word, std::size_t line, const char* what) {
    const double v = number(word, line, what);
    if (v < 0.0 || v > 1.0) throw ScenarioError(std::string(what) + " must be in [0, 1]", line);
    return v;
}

void expect_args(const std::vector<std::string_view>& words, std::size_t count, std::size_t line) {
    if (words.size() != count + 2) {
        throw ScenarioError("'" + std::string(words[1]) + "' takes " + std::to_string(count) + " argument(s)", line);
    }
}

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

ScenarioError::ScenarioError(const std::string& what, std::size_t line)
    : std::runtime_error("scenario line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<ScenarioEvent> parse_scenario(const std::string& text) {
    std::vector<ScenarioEvent> events;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    bool ended = false;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view(raw);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        const auto words = split_words(view);
        if (words.empty()) continue;
        if (words.size() < 2) throw ScenarioError("expected 'time kind args...'", line);
        if (ended) throw ScenarioError("event after 'end'", line);

        ScenarioEvent ev;
        ev.line = line;
        ev.time = number(words[0], line, "time");
        if (ev.time < 0.0) throw ScenarioError("time must be >= 0", line);
        if (!events.empty() && ev.time < events.back().time) {
            throw ScenarioError("events are not sorted by time", line);
        }

        const std::string_view kind = words[1];
        if (kind == "set_emotion") {
            expect_args(words, 2, line);
            try {
                ev.kind = SetEmotion{parse_feeling(words[2]), unit(words[3], line, "intensity")};
            } catch (const std::invalid_argument& e) {
                throw ScenarioError(e.what(), line);
            }
        } else if (kind == "set_mood") {
            expect_args(words, 1, line);
            ev.kind = SetMood{unit(words[2], line, "mood")};
        } else if (kind == "obstacle") {
            expect_args(words, 4, line);
            const double motor = number(words[2], line, "motor index");
            if (motor < 0 || motor >= static_cast<double>(kJointCount) || motor != std::floor(motor)) {
                throw ScenarioError("motor index must be an integer in [0, 7]", line);
            }
            const double offset = number(words[3], line, "start offset");
            const double duration = number(words[4], line, "duration");
            if (offset < 0.0 || duration < 0.0) throw ScenarioError("offset and duration must be >= 0", line);
            ev.kind = ObstacleEvent{static_cast<std::size_t>(motor), offset, duration,
                                    unit(words[5], line, "obstructed fraction")};
        } else if (kind == "end") {
            expect_args(words, 0, line);
            ev.kind = EndEvent{};
            ended = true;
        } else {
            throw ScenarioError("unknown event kind '" + std::string(kind) + "'", line);
        }
        events.push_back(ev);
    }
    return events;
}

std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scenario file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string describe(const ScenarioEvent& event) {
    std::string out = shortest(event.time) + " ";
    std::visit(
        [&out](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SetEmotion>) {
                out += "set_emotion " + std::string(feeling_name(k.feeling)) + " " + shortest(k.intensity);
            } else if constexpr (std::is_same_v<T, SetMood>) {
                out += "set_mood " + shortest(k.mu);
            } else if constexpr (std::is_same_v<T, ObstacleEvent>) {
                out += "obstacle " + std::to_string(k.motor) + " " + shortest(k.start_offset) + " " +
                       shortest(k.duration) + " " + shortest(k.fraction);
            } else {
                out += "end";
            }
        },
        event.kind);
    return out;
}

std::vector<TimelineRecord> run_scenario(const RunConfig& config, const std::vector<ScenarioEvent>& events) {
    config.validate();
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time < events[i - 1].time) throw ScenarioError("events are not sorted by time", events[i].line);
    }

    double end_time = config.max_duration;
    for (const auto& ev : events) {
        if (std::holds_alternative<EndEvent>(ev.kind)) end_time = ev.time;
    }

    MotionRuntime runtime(config.monitor, config.model.limits, config.initial_angles);
    const RunConfig* cfg = &config;
    GestureEngine engine(config.library, GestureSettings{config.tau_mood, config.bma.target_cost},
                         [cfg](const Pose9& target, std::uint64_t tick) {
                             BmaParams p = cfg->bma;
                             p.rng_seed = derive_seed(cfg->seed, tick);
                             return solve_ik(target, p, cfg->model);
                         });
    engine.state().set_last_update(0.0);

    std::vector<TimelineRecord> timeline;
    std::vector<BlockRecord> pending_blocks;
    std::vector<std::string> pending_events;
    double last_sample_time = 0.0;

    auto pump = [&] {
        while (auto line = runtime.receive()) {
            const Message msg = decode_message(*line);
            if (const auto* pos = std::get_if<PositionMessage>(&msg)) {
                last_sample_time = pos->time;
            } else if (const auto* blocked = std::get_if<BlockedMessage>(&msg)) {
                pending_blocks.push_back({last_sample_time, blocked->motor});
            }
        }
    };

    std::size_t next_event = 0;
    auto apply_events_until = [&](double t) {
        while (next_event < events.size() && events[next_event].time <= t) {
            const ScenarioEvent& ev = events[next_event++];
            runtime.advance_to(ev.time);
            pump();
            std::visit(
                [&](const auto& k) {
                    using T = std::decay_t<decltype(k)>;
                    if constexpr (std::is_same_v<T, SetEmotion>) {
                        engine.state().set_intensity(k.feeling, k.intensity);
                    } else if constexpr (std::is_same_v<T, SetMood>) {
                        engine.state().set_mood(k.mu);
                        engine.state().set_mood_baseline(k.mu);
                    } else if constexpr (std::is_same_v<T, ObstacleEvent>) {
                        runtime.schedule({k.motor, ev.time + k.start_offset, k.duration, k.fraction});
                    }
                },
                ev.kind);
            pending_events.push_back(describe(ev));
        }
        runtime.advance_to(t);
        pump();
    };

    auto snapshot = [&](double t) {
        TimelineRecord r;
        r.time = t;
        r.mu = engine.state().mood();
        r.feeling = select_feeling(engine.state());
        r.positions = positions_of(runtime.motors());
        r.blocked = std::move(pending_blocks);
        r.scenario_events = std::move(pending_events);
        pending_blocks.clear();
        pending_events.clear();
        return r;
    };

    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * config.gesture_period;
        if (t >= end_time) break;
        apply_events_until(t);

        const bool blocked = !pending_blocks.empty();
        const TickReport tick = engine.tick(t, blocked);
        if (tick.motor_command) runtime.send(encode_message(*tick.motor_command));

        TimelineRecord r = snapshot(t);
        r.feeling = tick.feeling;
        r.mu = tick.mu;
        r.action = tick.action;
        r.target = tick.command.target;
        r.ik_residual = tick.ik_residual;
        r.ik_ok = tick.ik_ok;
        r.commanded_speed = tick.command.commanded_speed;
        if (tick.motor_command) r.commanded_angles = tick.motor_command->targets.q;
        timeline.push_back(std::move(r));
    }

    apply_events_until(end_time);
    TimelineRecord last = snapshot(end_time);
    last.final = true;
    timeline.push_back(std::move(last));
    return timeline;
}

OutputFormat parse_format(const std::string& name) {
    if (name == "jsonl") return OutputFormat::Jsonl;
    if (name == "csv") return OutputFormat::Csv;
    throw std::invalid_argument("unknown output format '" + name + "' (expected csv or jsonl)");
}

void write_timeline(const std::vector<TimelineRecord>& records, OutputFormat format, std::ostream& out) {
    if (format == OutputFormat::Jsonl) {
        using nlohmann::json;
        for (const auto& r : records) {
            json blocked = json::array();
            for (const auto& b : r.blocked) blocked.push_back({{"time_s", b.time}, {"motor", b.motor}});
            json line = {
                {"time_s", r.time},
                {"record", r.final ? "end" : "tick"},
                {"feeling", feeling_name(r.feeling)},
                {"mu", r.mu},
                {"positions", r.positions},
                {"blocked", blocked},
                {"scenario_events", r.scenario_events},
            };
            if (!r.final) {
                line["action"] = tick_action_name(r.action);
                line["target"] = r.target.flat();
                line["ik_residual"] = r.ik_residual;
                line["ik_ok"] = r.ik_ok;
                line["commanded_speed"] = r.commanded_speed;
                line["commanded_angles"] = r.commanded_angles ? json(*r.commanded_angles) : json(nullptr);
            }
            out << line.dump() << '\n';
        }
        return;
    }

    out << "time_s,record,feeling,mu,action,ik_ok,ik_residual,commanded_speed";
    for (const char* name : {"rx", "ry", "rz", "lx", "ly", "lz", "hx", "hy", "hz"}) out << ",target_" << name;
    for (std::size_t i = 0; i < kJointCount; ++i) out << ",pos_" << joint_name(static_cast<Joint>(i));
    out << ",blocked,scenario_events\n";
    for (const auto& r : records) {
        out << shortest(r.time) << ',' << (r.final ? "end" : "tick") << ',' << feeling_name(r.feeling) << ','
            << shortest(r.mu) << ',' << (r.final ? "" : tick_action_name(r.action)) << ','
            << (r.final ? "" : (r.ik_ok ? "1" : "0")) << ',' << (r.final ? "" : shortest(r.ik_residual)) << ','
            << (r.final ? "" : shortest(r.commanded_speed));
        for (double v : r.target.flat()) out << ',' << (r.final ? "" : shortest(v));
        for (double v : r.positions) out << ',' << shortest(v);
        out << ',';
        for (std::size_t i = 0; i < r.blocked.size(); ++i) {
            out << (i ? ";" : "") << r.blocked[i].motor << '@' << shortest(r.blocked[i].time);
        }
        out << ',';
        for (std::size_t i = 0; i < r.scenario_events.size(); ++i) out << (i ? ";" : "") << r.scenario_events[i];
        out << '\n';
    }
}

}  // namespace partner
