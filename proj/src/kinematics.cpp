#include "partner/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace partner {

namespace {

constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "waist", "right_shoulder", "right_elbow", "right_finger",
    "left_shoulder", "left_elbow", "left_finger", "head",
};

constexpr std::array<JointRange, kJointCount> kDefaultRanges = {{
    {-1.744, 1.744},
    {-0.523, 3.1415},
    {-0.174, 1.744},
    {-0.174, 1.744},
    {-0.523, 3.1415},
    {-1.744, 0.174},
    {-1.744, 0.174},
    {0.174, 1.22},
}};

}  // namespace

std::string_view joint_name(Joint joint) { return kJointNames.at(index_of(joint)); }

bool JointAngles::all_finite() const {
    return std::all_of(q.begin(), q.end(), [](double v) { return std::isfinite(v); });
}

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

std::array<double, kPoseCoordinates> Pose9::flat() const {
    return {right_hand.x, right_hand.y, right_hand.z,
            left_hand.x,  left_hand.y,  left_hand.z,
            head_center.x, head_center.y, head_center.z};
}

Pose9 Pose9::from_flat(const std::array<double, kPoseCoordinates>& v) {
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}};
}

bool Pose9::all_finite() const {
    const auto v = flat();
    return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

void LinkLengths::validate() const {
    const std::array<std::pair<const char*, double>, 6> fields = {{
        {"l01", l01}, {"l12", l12}, {"l23", l23}, {"l34", l34}, {"lh1", lh1}, {"lh2", lh2},
    }};
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value) || value <= 0.0) {
            throw std::invalid_argument(std::string("link length ") + name + " must be finite and positive");
        }
    }
}

JointLimitTable::JointLimitTable() : ranges_(kDefaultRanges) {}

JointLimitTable::JointLimitTable(const std::array<JointRange, kJointCount>& ranges) : ranges_(ranges) {
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto& r = ranges_[i];
        if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max)) {
            throw std::invalid_argument("joint range for " + std::string(kJointNames[i]) +
                                        " must satisfy min < max");
        }
    }
}

bool JointLimitTable::contains(const JointAngles& angles) const {
    for (std::size_t i = 0; i < kJointCount; ++i) {
        if (angles[i] < ranges_[i].min || angles[i] > ranges_[i].max) return false;
    }
    return true;
}

Pose9 forward_kinematics(const JointAngles& a, const LinkLengths& L, FkVariant variant) {
    const double sW = std::sin(a[Joint::Waist]), cW = std::cos(a[Joint::Waist]);
    const double sRS = std::sin(a[Joint::RightShoulder]), cRS = std::cos(a[Joint::RightShoulder]);
    const double sRE = std::sin(a[Joint::RightElbow]), cRE = std::cos(a[Joint::RightElbow]);
    const double sRF = std::sin(a[Joint::RightFinger]), cRF = std::cos(a[Joint::RightFinger]);
    const double sLS = std::sin(a[Joint::LeftShoulder]), cLS = std::cos(a[Joint::LeftShoulder]);
    const double sLE = std::sin(a[Joint::LeftElbow]), cLE = std::cos(a[Joint::LeftElbow]);
    const double sLF = std::sin(a[Joint::LeftFinger]), cLF = std::cos(a[Joint::LeftFinger]);
    const double cH = std::cos(a[Joint::Head]);

    // The y coordinates as given carry cos(waist) where sin(shoulder) would be
    // expected by symmetry with x; kept unless the mirrored variant is asked for.
    const double right_y_factor = variant == FkVariant::Mirrored ? sRS : cW;
    const double left_y_factor = variant == FkVariant::Mirrored ? sLS : cW;

    Pose9 p;
    p.right_hand.x = L.l12 * sW + L.l23 * (cRE * sW + cW * sRS * sRE) +
                     L.l34 * (-cRF * (-cRE * sW + cW * sRS * sRE) + (cW * cRE * sRS - sW * sRE) * sRF);
    p.right_hand.y = -L.l12 * cW + L.l23 * (-cRE * cW + sW * sRS * sRE) +
                     L.l34 * (-cRF * (cRE * cW + sW * sRS * sRE) + (sW * cRE * right_y_factor + cW * sRE) * sRF);
    p.right_hand.z = L.l01 - L.l23 * cRS * sRE + L.l34 * (-cRS * cRF * sRE - cRS * cRE * sRF);

    p.left_hand.x = -L.l12 * sW + L.l23 * (-cLE * sW - cW * sLS * sLE) +
                    L.l34 * (cLF * (-cLE * sW + cW * sLS * sLE) - (cW * cLE * sLS - sW * sLE) * sLF);
    p.left_hand.y = L.l12 * cW + L.l23 * (cLE * cW - sW * sLS * sLE) +
                    L.l34 * (cLF * (cLE * cW + sW * sLS * sLE) - (sW * cLE * left_y_factor + cW * sLE) * sLF);
    p.left_hand.z = -L.l01 + L.l23 * cLS * sLE + L.l34 * (cLS * cLF * sLE + cLS * cLE * sLF);

    p.head_center.x = L.lh2 * cW * cH;
    p.head_center.y = L.lh2 * sW * cH;
    p.head_center.z = L.l01 + L.lh1 + L.lh2 * cH;
    return p;
}

ValidationResult validate_joints(const JointAngles& angles, const JointLimitTable& limits) {
    ValidationResult result;
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto& r = limits[i];
        if (angles[i] < r.min) {
            result.violations.push_back({static_cast<Joint>(i), angles[i] - r.min});
        } else if (angles[i] > r.max) {
            result.violations.push_back({static_cast<Joint>(i), angles[i] - r.max});
        }
    }
    return result;
}

JointAngles clamp_joints(const JointAngles& angles, const JointLimitTable& limits) {
    JointAngles out;
    for (std::size_t i = 0; i < kJointCount; ++i) {
        out[i] = std::clamp(angles[i], limits[i].min, limits[i].max);
    }
    return out;
}

double pose_error(const Pose9& desired, const Pose9& actual) {
    const auto d = desired.flat();
    const auto a = actual.flat();
    double sum = 0.0;
    for (std::size_t i = 0; i < kPoseCoordinates; ++i) {
        const double diff = d[i] - a[i];
        sum += diff * diff;
    }
    return sum;
}

}  // namespace partner
