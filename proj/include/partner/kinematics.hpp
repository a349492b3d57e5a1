#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <string_view>
#include <vector>

namespace partner {

/// Motor order used everywhere: waist, right arm (shoulder, elbow, fingertip),
/// left arm (shoulder, elbow, fingertip), head.
enum class Joint : std::size_t {
    Waist = 0,
    RightShoulder,
    RightElbow,
    RightFinger,
    LeftShoulder,
    LeftElbow,
    LeftFinger,
    Head,
};

inline constexpr std::size_t kJointCount = 8;
inline constexpr std::size_t kPoseCoordinates = 9;

std::string_view joint_name(Joint joint);
constexpr std::size_t index_of(Joint joint) { return static_cast<std::size_t>(joint); }

/// The eight motor angles in radians.
struct JointAngles {
    std::array<double, kJointCount> q{};

    double& operator[](Joint j) { return q[index_of(j)]; }
    double operator[](Joint j) const { return q[index_of(j)]; }
    double& operator[](std::size_t i) { return q[i]; }
    double operator[](std::size_t i) const { return q[i]; }

    bool all_finite() const;
    friend bool operator==(const JointAngles&, const JointAngles&) = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Fingertip and head-center positions in the base frame, meters.
struct Pose9 {
    Vec3 right_hand;
    Vec3 left_hand;
    Vec3 head_center;

    std::array<double, kPoseCoordinates> flat() const;
    static Pose9 from_flat(const std::array<double, kPoseCoordinates>& v);
    bool all_finite() const;
    friend bool operator==(const Pose9&, const Pose9&) = default;
};

struct LinkLengths {
    double l01 = 0.05;
    double l12 = 0.04;
    double l23 = 0.06;
    double l34 = 0.06;
    double lh1 = 0.03;
    double lh2 = 0.04;

    /// Throws std::invalid_argument unless every length is finite and > 0.
    void validate() const;
    double arm_reach() const { return l01 + l12 + l23 + l34; }
    /// The head offset lh2·cos(head) enters both the horizontal and the
    /// vertical coordinate, so its contribution is bounded by sqrt(2)·lh2.
    double head_reach() const { return l01 + lh1 + std::numbers::sqrt2 * lh2; }
};

struct JointRange {
    double min = 0.0;
    double max = 0.0;
    double width() const { return max - min; }
};

class JointLimitTable {
public:
    /// Motor ranges of the physical robot (radians).
    JointLimitTable();
    explicit JointLimitTable(const std::array<JointRange, kJointCount>& ranges);

    const JointRange& operator[](Joint j) const { return ranges_[index_of(j)]; }
    const JointRange& operator[](std::size_t i) const { return ranges_[i]; }
    const std::array<JointRange, kJointCount>& ranges() const { return ranges_; }

    bool contains(const JointAngles& angles) const;

private:
    std::array<JointRange, kJointCount> ranges_;
};

/// Selects how the y-coordinate fingertip terms are evaluated. `AsPrinted`
/// reproduces the reference closed form including its cos(waist) factor in
/// the fingertip term; `Mirrored` substitutes sin(shoulder), matching the
/// structure of the x equations.
enum class FkVariant { AsPrinted, Mirrored };

/// Everything the solver needs to know about the robot body.
struct RobotModel {
    LinkLengths links;
    JointLimitTable limits;
    FkVariant variant = FkVariant::AsPrinted;
};

Pose9 forward_kinematics(const JointAngles& angles, const LinkLengths& links,
                         FkVariant variant = FkVariant::AsPrinted);

struct JointViolation {
    Joint joint;
    double excess;  // signed: negative below min, positive above max
};

struct ValidationResult {
    std::vector<JointViolation> violations;
    bool ok() const { return violations.empty(); }
};

ValidationResult validate_joints(const JointAngles& angles, const JointLimitTable& limits);

JointAngles clamp_joints(const JointAngles& angles, const JointLimitTable& limits);

/// Sum of squared coordinate differences over the nine coordinates.
double pose_error(const Pose9& desired, const Pose9& actual);

}  // namespace partner
