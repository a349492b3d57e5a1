#include "partner/motion_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace partner {

void MonitorConfig::validate() const {
    if (!(std::isfinite(period) && period > 0.0)) throw std::invalid_argument("monitor period must be > 0");
    if (!(limit_factor > 0.0 && limit_factor < 1.0)) throw std::invalid_argument("limit_factor must be in (0, 1)");
    if (!(std::isfinite(arrival_tolerance) && arrival_tolerance >= 0.0)) {
        throw std::invalid_argument("arrival_tolerance must be >= 0");
    }
    if (!(std::isfinite(speed_cap) && speed_cap > 0.0)) throw std::invalid_argument("speed_cap must be > 0");
}

void validate_command(const MotorCommand& command, const JointLimitTable& limits, const MonitorConfig& cfg) {
    if (!command.targets.all_finite() || !limits.contains(command.targets)) {
        throw std::invalid_argument("motor targets outside joint limits");
    }
    for (double v : command.speeds) {
        if (!(std::isfinite(v) && v > 0.0 && v <= cfg.speed_cap)) {
            throw std::invalid_argument("motor speed must be in (0, speed_cap]");
        }
    }
}

MotorBank make_bank(const JointAngles& positions) {
    MotorBank bank{};
    for (std::size_t i = 0; i < kJointCount; ++i) {
        bank[i].position = positions[i];
        bank[i].target = positions[i];
    }
    return bank;
}

MotorVector positions_of(const MotorBank& bank) {
    MotorVector out{};
    for (std::size_t i = 0; i < kJointCount; ++i) out[i] = bank[i].position;
    return out;
}

MotorBank simulate_step(MotorBank motors, double dt, double arrival_tolerance) {
    for (auto& m : motors) {
        if (!m.moving) continue;
        const double advance = m.commanded_speed * m.obstructed_fraction * dt;
        const double remaining = m.target - m.position;
        if (std::abs(remaining) <= advance) {
            m.position = m.target;
        } else {
            m.position += std::copysign(advance, remaining);
        }
        if (std::abs(m.target - m.position) <= arrival_tolerance) m.moving = false;
    }
    return motors;
}

MotorVector estimate_speeds(const MotorVector& previous, const MotorVector& current, double period) {
    MotorVector speeds{};
    for (std::size_t i = 0; i < kJointCount; ++i) speeds[i] = std::abs(current[i] - previous[i]) / period;
    return speeds;
}

std::optional<BlockedEvent> check_blocking(const MotorVector& estimated, const MotorCommand& command,
                                           MotorBank& motors, const MonitorConfig& cfg) {
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto& m = motors[i];
        if (!m.moving || std::abs(m.target - m.position) <= cfg.arrival_tolerance) continue;
        const double threshold = cfg.limit_factor * command.speeds[i];
        if (estimated[i] < threshold) {
            for (auto& other : motors) {
                other.moving = false;
                other.target = other.position;
            }
            return BlockedEvent{i, estimated[i], threshold};
        }
    }
    return std::nullopt;
}

MotionRuntime::MotionRuntime(const MonitorConfig& cfg, const JointLimitTable& limits, const JointAngles& initial)
    : cfg_(cfg), limits_(limits), motors_(make_bank(initial)), last_sample_(initial.q) {
    cfg_.validate();
    if (!initial.all_finite()) throw std::invalid_argument("initial motor positions must be finite");
}

std::optional<std::string> MotionRuntime::receive() {
    if (outbound_.empty()) return std::nullopt;
    std::string line = std::move(outbound_.front());
    outbound_.pop_front();
    return line;
}

std::int64_t MotionRuntime::step_of(double t) const {
    // Times within a millionth of a step snap to the grid point.
    return static_cast<std::int64_t>(std::ceil(t / cfg_.step() - 1e-6));
}

void MotionRuntime::schedule(const Obstruction& obstruction) {
    if (obstruction.motor >= kJointCount) throw std::invalid_argument("obstruction motor index out of range");
    if (!(obstruction.fraction >= 0.0 && obstruction.fraction <= 1.0)) {
        throw std::invalid_argument("obstructed fraction must be in [0, 1]");
    }
    if (!(obstruction.duration >= 0.0) || !std::isfinite(obstruction.start)) {
        throw std::invalid_argument("obstruction timing must be finite and non-negative");
    }
    obstructions_.push_back({obstruction, step_of(obstruction.start), step_of(obstruction.start + obstruction.duration)});
}

double MotionRuntime::obstruction_at(std::size_t motor, std::int64_t step) const {
    double fraction = 1.0;
    for (const auto& o : obstructions_) {
        if (o.obstruction.motor == motor && step >= o.first_step && step < o.end_step) {
            fraction = std::min(fraction, o.obstruction.fraction);
        }
    }
    return fraction;
}

bool MotionRuntime::idle() const {
    return std::none_of(motors_.begin(), motors_.end(), [](const MotorState& m) { return m.moving; });
}

void MotionRuntime::apply(const Message& message) {
    if (const auto* cmd = std::get_if<MotorCommand>(&message)) {
        validate_command(*cmd, limits_, cfg_);
        command_ = *cmd;
        for (std::size_t i = 0; i < kJointCount; ++i) {
            auto& m = motors_[i];
            m.target = cmd->targets[i];
            m.commanded_speed = cmd->speeds[i];
            m.moving = std::abs(m.target - m.position) > cfg_.arrival_tolerance;
        }
        // The monitor restarts its sampling window at the command instant.
        last_sample_ = positions_of(motors_);
        steps_since_sample_ = 0;
        blocked_ = false;
        arrival_reported_ = false;
    } else if (std::holds_alternative<StopMessage>(message)) {
        for (auto& m : motors_) {
            m.moving = false;
            m.target = m.position;
        }
    } else {
        throw std::invalid_argument("runtime accepts only MOVE and STOP");
    }
}

void MotionRuntime::process_inbound() {
    while (!inbound_.empty()) {
        const std::string line = std::move(inbound_.front());
        inbound_.pop_front();
        apply(decode_message(line));
    }
}

void MotionRuntime::emit(const RuntimeEvent& event) {
    trace_.push_back({now(), event});
    if (const auto* blocked = std::get_if<BlockedEvent>(&event)) {
        outbound_.push_back(encode_message(BlockedMessage{blocked->motor}));
    } else if (std::holds_alternative<ArrivedEvent>(event)) {
        outbound_.push_back(encode_message(ArrivedMessage{}));
    } else {
        outbound_.push_back(encode_message(PositionMessage{now(), std::get<TelemetryEvent>(event).positions}));
    }
}

void MotionRuntime::step_once() {
    process_inbound();
    for (std::size_t i = 0; i < kJointCount; ++i) motors_[i].obstructed_fraction = obstruction_at(i, step_);
    motors_ = simulate_step(motors_, cfg_.step(), cfg_.arrival_tolerance);
    ++step_;

    if (++steps_since_sample_ == MonitorConfig::kStepsPerPeriod) {
        steps_since_sample_ = 0;
        const MotorVector current = positions_of(motors_);
        const MotorVector speeds = estimate_speeds(last_sample_, current, cfg_.period);
        last_sample_ = current;
        emit(TelemetryEvent{current});
        if (command_ && !blocked_) {
            if (const auto event = check_blocking(speeds, *command_, motors_, cfg_)) {
                blocked_ = true;
                arrival_reported_ = true;
                emit(*event);
            }
        }
    }
    if (command_ && !arrival_reported_ && idle()) {
        arrival_reported_ = true;
        emit(ArrivedEvent{});
    }
}

void MotionRuntime::advance_to(double t) {
    process_inbound();
    const std::int64_t target = step_of(t);
    while (step_ < target) step_once();
}

std::vector<TimedEvent> run_motion(const MotorCommand& command, std::span<const Obstruction> obstacles,
                                   const MonitorConfig& cfg, const JointAngles& initial, double max_duration,
                                   const JointLimitTable& limits) {
    MotionRuntime runtime(cfg, limits, initial);
    for (const auto& o : obstacles) runtime.schedule(o);
    runtime.apply(command);
    const std::int64_t last = runtime.step_of(max_duration);
    while (runtime.step_index() < last) {
        runtime.step_once();
        if (runtime.blocked()) break;
        if (runtime.idle() && !runtime.trace().empty() &&
            std::holds_alternative<ArrivedEvent>(runtime.trace().back().event)) {
            break;
        }
    }
    return runtime.trace();
}

void write_trace_jsonl(std::span<const TimedEvent> trace, std::ostream& out) {
    using nlohmann::json;
    for (const auto& e : trace) {
        json line = {{"time_s", e.time}};
        std::visit(
            [&line](const auto& ev) {
                using T = std::decay_t<decltype(ev)>;
                if constexpr (std::is_same_v<T, BlockedEvent>) {
                    line["event"] = "BLOCKED";
                    line["motor"] = ev.motor;
                    line["estimated_speed"] = ev.estimated_speed;
                    line["threshold"] = ev.threshold;
                } else if constexpr (std::is_same_v<T, ArrivedEvent>) {
                    line["event"] = "ARRIVED";
                } else {
                    line["event"] = "TELEMETRY";
                    line["positions"] = ev.positions;
                }
            },
            e.event);
        out << line.dump() << '\n';
    }
}

}  // namespace partner
