#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "partner/gesture.hpp"
#include "partner/ik_solver.hpp"
#include "partner/kinematics.hpp"
#include "partner/motion_runtime.hpp"

namespace partner {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    RobotModel model;
    BmaParams bma;
    MonitorConfig monitor;
    JointAngles initial_angles;
    MovementLibrary library;
    double tau_mood = 60.0;
    double gesture_period = 2.0;
    double max_duration = 20.0;  // used when the scenario has no `end` event
    std::uint64_t seed = 1;

    /// Throws ConfigError describing the first broken invariant.
    void validate() const;
};

/// Neutral and peak joint configurations for the eight feelings. Poses are
/// illustrative, chosen to look like the gesture and to stay reachable.
struct GestureAngles {
    Feeling feeling;
    JointAngles neutral;
    JointAngles peak;
    double speed_min;
    double speed_max;
};
const std::array<GestureAngles, kFeelingCount>& default_gesture_angles();

MovementLibrary make_library(const std::array<GestureAngles, kFeelingCount>& gestures, const RobotModel& model);

RunConfig default_run_config();

/// Parses a JSON document with optional sections `kinematics`, `solver`,
/// `monitor`, `runtime`, `gesture`, `run`. Missing keys keep their defaults;
/// unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace partner
