#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "partner/ik_solver.hpp"
#include "partner/kinematics.hpp"
#include "partner/motion_runtime.hpp"

namespace partner {

enum class Feeling : std::size_t {
    Happiness = 0,
    Sadness,
    Fright,
    Fear,
    Thrill,
    Disgust,
    Angriness,
    Surprise,
};

inline constexpr std::size_t kFeelingCount = 8;

std::string_view feeling_name(Feeling feeling);
/// Throws std::invalid_argument for unknown names.
Feeling parse_feeling(std::string_view name);

/// Short-time emotion intensities per feeling plus the long-time mood.
/// Setters clamp into [0, 1].
class EmotionalState {
public:
    EmotionalState() = default;

    double intensity(Feeling f) const { return intensity_[static_cast<std::size_t>(f)]; }
    const std::array<double, kFeelingCount>& intensities() const { return intensity_; }
    double mood() const { return mood_; }
    double mood_baseline() const { return baseline_; }
    double last_update() const { return last_update_; }

    void set_intensity(Feeling f, double value);
    void set_mood(double value);
    void set_mood_baseline(double value);
    void set_last_update(double t) { last_update_ = t; }

private:
    std::array<double, kFeelingCount> intensity_{};
    double mood_ = 0.0;
    double baseline_ = 0.0;
    double last_update_ = 0.0;
};

struct MovementFunction {
    Feeling feeling = Feeling::Happiness;
    Pose9 neutral_pose;
    Pose9 peak_pose;
    double speed_min = 0.3;  // rad/s
    double speed_max = 1.5;  // rad/s
};

class UnknownFeeling : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class MovementLibrary {
public:
    /// Replaces any existing entry for the same feeling. Throws
    /// std::invalid_argument on a bad speed range or non-finite poses.
    void add(const MovementFunction& fn);
    const MovementFunction& at(Feeling f) const;
    bool contains(Feeling f) const { return entries_[static_cast<std::size_t>(f)].has_value(); }

private:
    std::array<std::optional<MovementFunction>, kFeelingCount> entries_;
};

struct GestureCommand {
    Pose9 target;
    double commanded_speed = 0.0;
    Feeling feeling = Feeling::Happiness;
    double mu_used = 0.0;
};

/// Strongest intensity wins; ties go to the earliest feeling in enum order.
Feeling select_feeling(const EmotionalState& state);

/// Linear interpolation from the neutral to the peak pose, and from the
/// minimum to the maximum speed, with membership degree `mu` in [0, 1].
GestureCommand gesture_target(Feeling feeling, double mu, const MovementLibrary& library);

/// Contact with an obstacle lowers the mood by 20%.
EmotionalState apply_block_event(EmotionalState state);
inline constexpr double kBlockMoodFactor = 0.8;

/// Exponential relaxation of the mood toward its baseline.
EmotionalState recover_mood(EmotionalState state, double dt, double tau_mood);

// ---------------------------------------------------------------------------

/// IK backend used by the gesture engine; typically wraps solve_ik with a
/// per-tick seed.
using IkSolverFn = std::function<SolveReport(const Pose9& target, std::uint64_t tick_index)>;

enum class TickAction { Gesture, Neutral, Hold };
std::string_view tick_action_name(TickAction action);

struct TickReport {
    double time = 0.0;
    std::uint64_t tick_index = 0;
    Feeling feeling = Feeling::Happiness;
    double mu = 0.0;
    TickAction action = TickAction::Hold;
    bool blocked = false;             // a BLOCKED event arrived since the previous tick
    bool ik_ok = false;
    double ik_residual = 0.0;
    GestureCommand command;
    std::optional<MotorCommand> motor_command;  // empty on Hold
};

struct GestureSettings {
    double tau_mood = 60.0;   // seconds
    double ik_threshold = 1e-8;  // residual above this counts as an IK failure
};

/// Owner of the emotional state; runs one decision step per gesture period.
class GestureEngine {
public:
    GestureEngine(MovementLibrary library, GestureSettings settings, IkSolverFn solver);

    EmotionalState& state() { return state_; }
    const EmotionalState& state() const { return state_; }
    const MovementLibrary& library() const { return library_; }

    /// Recovers mood since the last tick, then either reacts to a block seen
    /// since the previous tick (mood decrement, neutral pose) or commands the
    /// current feeling's gesture. A failed IK produces Hold and no command.
    TickReport tick(double now, bool blocked_since_last_tick);

private:
    MovementLibrary library_;
    GestureSettings settings_;
    IkSolverFn solver_;
    EmotionalState state_;
    std::uint64_t ticks_ = 0;
};

}  // namespace partner
