#include "partner/gesture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace partner {

namespace {

constexpr std::array<std::string_view, kFeelingCount> kFeelingNames = {
    "happiness", "sadness", "fright", "fear", "thrill", "disgust", "angriness", "surprise",
};

double unit_clamp(double v) {
    if (std::isnan(v)) throw std::invalid_argument("emotional value must not be NaN");
    return std::clamp(v, 0.0, 1.0);
}

// Both endpoints are reproduced exactly; a + 1·(b − a) need not round to b.
Pose9 lerp(const Pose9& from, const Pose9& to, double mu) {
    if (mu == 1.0) return to;
    const auto a = from.flat();
    const auto b = to.flat();
    std::array<double, kPoseCoordinates> out{};
    for (std::size_t i = 0; i < kPoseCoordinates; ++i) out[i] = a[i] + mu * (b[i] - a[i]);
    return Pose9::from_flat(out);
}

double speed_for(const MovementFunction& fn, double mu) {
    if (mu == 1.0) return fn.speed_max;
    return fn.speed_min + mu * (fn.speed_max - fn.speed_min);
}

}  // namespace

std::string_view feeling_name(Feeling feeling) { return kFeelingNames.at(static_cast<std::size_t>(feeling)); }

Feeling parse_feeling(std::string_view name) {
    for (std::size_t i = 0; i < kFeelingCount; ++i) {
        if (kFeelingNames[i] == name) return static_cast<Feeling>(i);
    }
    throw std::invalid_argument("unknown feeling '" + std::string(name) + "'");
}

void EmotionalState::set_intensity(Feeling f, double value) {
    intensity_.at(static_cast<std::size_t>(f)) = unit_clamp(value);
}
void EmotionalState::set_mood(double value) { mood_ = unit_clamp(value); }
void EmotionalState::set_mood_baseline(double value) { baseline_ = unit_clamp(value); }

void MovementLibrary::add(const MovementFunction& fn) {
    if (!(std::isfinite(fn.speed_min) && fn.speed_min > 0.0 && fn.speed_min <= fn.speed_max &&
          std::isfinite(fn.speed_max))) {
        throw std::invalid_argument("movement speeds must satisfy 0 < speed_min <= speed_max");
    }
    if (!fn.neutral_pose.all_finite() || !fn.peak_pose.all_finite()) {
        throw std::invalid_argument("movement poses must be finite");
    }
    entries_.at(static_cast<std::size_t>(fn.feeling)) = fn;
}

const MovementFunction& MovementLibrary::at(Feeling f) const {
    const auto& entry = entries_.at(static_cast<std::size_t>(f));
    if (!entry) throw UnknownFeeling("no movement function for " + std::string(feeling_name(f)));
    return *entry;
}

Feeling select_feeling(const EmotionalState& state) {
    const auto& v = state.intensities();
    return static_cast<Feeling>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

GestureCommand gesture_target(Feeling feeling, double mu, const MovementLibrary& library) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("mood membership must be in [0, 1]");
    const MovementFunction& fn = library.at(feeling);
    return {lerp(fn.neutral_pose, fn.peak_pose, mu), speed_for(fn, mu), feeling, mu};
}

EmotionalState apply_block_event(EmotionalState state) {
    state.set_mood(kBlockMoodFactor * state.mood());
    return state;
}

EmotionalState recover_mood(EmotionalState state, double dt, double tau_mood) {
    if (!(dt >= 0.0)) throw std::invalid_argument("recovery interval must be >= 0");
    if (!(tau_mood > 0.0)) throw std::invalid_argument("mood time constant must be > 0");
    const double baseline = state.mood_baseline();
    const double gap = baseline - state.mood();
    if (gap == 0.0 || dt == 0.0) return state;
    double mood = baseline - gap * std::exp(-dt / tau_mood);
    mood = gap > 0.0 ? std::min(mood, baseline) : std::max(mood, baseline);
    state.set_mood(mood);
    return state;
}

std::string_view tick_action_name(TickAction action) {
    switch (action) {
        case TickAction::Gesture: return "gesture";
        case TickAction::Neutral: return "neutral";
        case TickAction::Hold: return "hold";
    }
    return "hold";
}

GestureEngine::GestureEngine(MovementLibrary library, GestureSettings settings, IkSolverFn solver)
    : library_(std::move(library)), settings_(settings), solver_(std::move(solver)) {
    if (!(settings_.tau_mood > 0.0)) throw std::invalid_argument("tau_mood must be > 0");
    if (!solver_) throw std::invalid_argument("gesture engine needs an IK solver");
}

TickReport GestureEngine::tick(double now, bool blocked_since_last_tick) {
    state_ = recover_mood(state_, std::max(0.0, now - state_.last_update()), settings_.tau_mood);
    state_.set_last_update(now);

    TickReport report;
    report.time = now;
    report.tick_index = ticks_++;
    report.blocked = blocked_since_last_tick;
    report.feeling = select_feeling(state_);

    if (blocked_since_last_tick) {
        state_ = apply_block_event(state_);
        const MovementFunction& fn = library_.at(report.feeling);
        // The return to neutral moves at the speed of the lowered mood.
        report.command = {fn.neutral_pose, speed_for(fn, state_.mood()), report.feeling, state_.mood()};
        report.action = TickAction::Neutral;
    } else {
        report.command = gesture_target(report.feeling, state_.mood(), library_);
        report.action = TickAction::Gesture;
    }
    report.mu = state_.mood();

    const SolveReport solved = solver_(report.command.target, report.tick_index);
    report.ik_residual = solved.best_cost;
    report.ik_ok = solved.best_cost <= settings_.ik_threshold;
    if (report.ik_ok) {
        MotorCommand cmd;
        cmd.targets = solved.best_angles;
        cmd.speeds.fill(report.command.commanded_speed);
        report.motor_command = cmd;
    } else {
        report.action = TickAction::Hold;
    }
    return report;
}

}  // namespace partner
