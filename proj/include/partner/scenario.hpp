#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "partner/config.hpp"
#include "partner/gesture.hpp"
#include "partner/motion_runtime.hpp"

namespace partner {

struct SetEmotion {
    Feeling feeling;
    double intensity;
};
struct SetMood {
    double mu;
};
struct ObstacleEvent {
    std::size_t motor;
    double start_offset;
    double duration;
    double fraction;
};
struct EndEvent {};

struct ScenarioEvent {
    double time = 0.0;
    std::variant<SetEmotion, SetMood, ObstacleEvent, EndEvent> kind;
    std::size_t line = 0;  // 1-based source line, 0 if built in code
};

/// Parse failure or unsorted timestamps; the message names the line.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& what, std::size_t line);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// One event per line: `time kind args...`; `#` starts a comment.
///   0.0 set_emotion happiness 1.0
///   0.0 set_mood 0.9
///   0.3 obstacle <motor> <start_offset> <duration> <fraction>
///   12.0 end
std::vector<ScenarioEvent> parse_scenario(const std::string& text);
std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path);

std::string describe(const ScenarioEvent& event);

struct BlockRecord {
    double time = 0.0;
    std::size_t motor = 0;
};

struct TimelineRecord {
    double time = 0.0;
    bool final = false;  // the closing record at the end of the run
    Feeling feeling = Feeling::Happiness;
    double mu = 0.0;
    TickAction action = TickAction::Hold;
    Pose9 target;
    double ik_residual = 0.0;
    bool ik_ok = false;
    MotorVector positions{};
    std::optional<MotorVector> commanded_angles;
    double commanded_speed = 0.0;
    std::vector<BlockRecord> blocked;
    std::vector<std::string> scenario_events;
};

/// Ticks the gesture engine every gesture period, applying scenario events at
/// their timestamps and forwarding BLOCKED reports from the runtime. Solve
/// seeds derive from `config.seed` and the tick index.
std::vector<TimelineRecord> run_scenario(const RunConfig& config, const std::vector<ScenarioEvent>& events);

enum class OutputFormat { Jsonl, Csv };
OutputFormat parse_format(const std::string& name);

void write_timeline(const std::vector<TimelineRecord>& records, OutputFormat format, std::ostream& out);

}  // namespace partner
