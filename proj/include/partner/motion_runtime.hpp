#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <stdexcept>
#include <variant>
#include <vector>

#include "partner/kinematics.hpp"

namespace partner {

using MotorVector = std::array<double, kJointCount>;

/// Blocking monitor settings. A moving motor whose speed over one sampling
/// period falls below `limit_factor` times its commanded speed is treated as
/// blocked by an obstacle.
struct MonitorConfig {
    double period = 0.1;              // s
    double limit_factor = 0.9372;
    double arrival_tolerance = 0.005;  // rad
    double speed_cap = 6.0;            // rad/s

    void validate() const;
    /// The simulation advances in fixed steps of period / kStepsPerPeriod.
    static constexpr int kStepsPerPeriod = 10;
    double step() const { return period / kStepsPerPeriod; }
};

struct MotorCommand {
    JointAngles targets;
    MotorVector speeds{};

    friend bool operator==(const MotorCommand&, const MotorCommand&) = default;
};

/// Throws std::invalid_argument unless targets lie in `limits` and every speed
/// is in (0, cfg.speed_cap].
void validate_command(const MotorCommand& command, const JointLimitTable& limits, const MonitorConfig& cfg);

struct MotorState {
    double position = 0.0;
    double target = 0.0;
    double commanded_speed = 0.0;
    bool moving = false;
    double obstructed_fraction = 1.0;  // 1 = free, 0 = held
};

using MotorBank = std::array<MotorState, kJointCount>;

MotorBank make_bank(const JointAngles& positions);
MotorVector positions_of(const MotorBank& bank);

/// Advances every moving motor toward its target by speed × fraction × dt,
/// never past the target. Motors within `arrival_tolerance` stop moving.
MotorBank simulate_step(MotorBank motors, double dt, double arrival_tolerance);

MotorVector estimate_speeds(const MotorVector& previous, const MotorVector& current, double period);

struct BlockedEvent {
    std::size_t motor = 0;
    double estimated_speed = 0.0;
    double threshold = 0.0;

    friend bool operator==(const BlockedEvent&, const BlockedEvent&) = default;
};
struct ArrivedEvent {
    friend bool operator==(const ArrivedEvent&, const ArrivedEvent&) = default;
};
struct TelemetryEvent {
    MotorVector positions{};
    friend bool operator==(const TelemetryEvent&, const TelemetryEvent&) = default;
};
using RuntimeEvent = std::variant<BlockedEvent, ArrivedEvent, TelemetryEvent>;

struct TimedEvent {
    double time = 0.0;
    RuntimeEvent event;

    friend bool operator==(const TimedEvent&, const TimedEvent&) = default;
};

/// Checks the motors that are moving and not yet at their target. Returns the
/// lowest-index motor under threshold and stops every motor in `motors`.
std::optional<BlockedEvent> check_blocking(const MotorVector& estimated, const MotorCommand& command,
                                           MotorBank& motors, const MonitorConfig& cfg);

// --- wire protocol ---------------------------------------------------------

struct StopMessage {
    friend bool operator==(const StopMessage&, const StopMessage&) = default;
};
struct PositionMessage {
    double time = 0.0;
    MotorVector positions{};
    friend bool operator==(const PositionMessage&, const PositionMessage&) = default;
};
struct BlockedMessage {
    std::size_t motor = 0;
    friend bool operator==(const BlockedMessage&, const BlockedMessage&) = default;
};
struct ArrivedMessage {
    friend bool operator==(const ArrivedMessage&, const ArrivedMessage&) = default;
};

/// MOVE carries a MotorCommand.
using Message = std::variant<MotorCommand, StopMessage, PositionMessage, BlockedMessage, ArrivedMessage>;

class MalformedMessage : public std::runtime_error {
public:
    MalformedMessage(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// One newline-terminated ASCII line:
///   MOVE t1..t8 v1..v8 | STOP | POS time p1..p8 | BLOCKED idx | ARRIVED
/// Reals are fixed-point with at least six fractional digits and enough
/// digits to round-trip exactly.
std::string encode_message(const Message& message);
/// Accepts the line with or without its trailing newline.
Message decode_message(std::string_view line);

std::string format_real(double value);

// --- runtime ---------------------------------------------------------------

/// Obstruction of one motor starting at absolute time `start`.
struct Obstruction {
    std::size_t motor = 0;
    double start = 0.0;
    double duration = 0.0;
    double fraction = 0.0;
};

/// Servo bank plus blocking monitor on a single clock. Commands arrive as
/// protocol lines on an inbound FIFO; telemetry and events leave as lines on
/// an outbound FIFO. Time advances in whole simulation steps.
class MotionRuntime {
public:
    MotionRuntime(const MonitorConfig& cfg, const JointLimitTable& limits, const JointAngles& initial);

    void send(std::string line) { inbound_.push_back(std::move(line)); }
    std::optional<std::string> receive();

    void schedule(const Obstruction& obstruction);

    /// Applies a command immediately, bypassing the text link.
    void apply(const Message& message);

    /// Runs whole steps until now() >= t (rounded to the step grid).
    void advance_to(double t);
    void step_once();

    double now() const { return static_cast<double>(step_) * cfg_.period / MonitorConfig::kStepsPerPeriod; }
    std::int64_t step_index() const { return step_; }
    std::int64_t step_of(double t) const;
    const MotorBank& motors() const { return motors_; }
    const std::vector<TimedEvent>& trace() const { return trace_; }
    bool idle() const;
    bool blocked() const { return blocked_; }

private:
    void process_inbound();
    void emit(const RuntimeEvent& event);
    double obstruction_at(std::size_t motor, std::int64_t step) const;

    MonitorConfig cfg_;
    JointLimitTable limits_;
    MotorBank motors_;
    std::optional<MotorCommand> command_;
    MotorVector last_sample_{};
    int steps_since_sample_ = 0;
    std::int64_t step_ = 0;
    bool blocked_ = false;
    bool arrival_reported_ = true;
    struct ScheduledObstruction {
        Obstruction obstruction;
        std::int64_t first_step;  // active on steps [first_step, end_step)
        std::int64_t end_step;
    };
    std::vector<ScheduledObstruction> obstructions_;
    std::deque<std::string> inbound_;
    std::deque<std::string> outbound_;
    std::vector<TimedEvent> trace_;
};

/// Executes one command from `initial` until arrival, a block, or
/// `max_duration` seconds. Deterministic.
std::vector<TimedEvent> run_motion(const MotorCommand& command, std::span<const Obstruction> obstacles,
                                   const MonitorConfig& cfg, const JointAngles& initial,
                                   double max_duration = 60.0,
                                   const JointLimitTable& limits = JointLimitTable{});

/// Line-delimited JSON: {"time_s", "event", "motor"?, "positions"?}.
void write_trace_jsonl(std::span<const TimedEvent> trace, std::ostream& out);

}  // namespace partner
