#include "partner/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace partner {

namespace {

using nlohmann::json;

JointAngles angles(double w, double rs, double re, double rf, double ls, double le, double lf, double h) {
    return JointAngles{{w, rs, re, rf, ls, le, lf, h}};
}

const JointAngles kRestAngles = angles(0.0, 0.0, 0.2, 0.2, 0.0, -0.2, -0.2, 0.6);

bool within(const Vec3& p, double reach) { return p.norm() <= reach + 1e-9; }

void reject_unknown(const json& section, const std::set<std::string>& known, const std::string& where) {
    if (!section.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : section.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& section, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <std::size_t N>
std::array<double, N> read_array(const json& value, const std::string& what) {
    if (!value.is_array() || value.size() != N) {
        throw ConfigError(what + " must be an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!value[i].is_number()) throw ConfigError(what + " must contain numbers");
        out[i] = value[i].get<double>();
    }
    return out;
}

void parse_kinematics(const json& s, RunConfig& cfg) {
    reject_unknown(s, {"links", "variant", "joint_limits"}, "kinematics");
    if (s.contains("links")) {
        const json& l = s.at("links");
        reject_unknown(l, {"l01", "l12", "l23", "l34", "lh1", "lh2"}, "kinematics.links");
        auto& links = cfg.model.links;
        read(l, "l01", links.l01);
        read(l, "l12", links.l12);
        read(l, "l23", links.l23);
        read(l, "l34", links.l34);
        read(l, "lh1", links.lh1);
        read(l, "lh2", links.lh2);
    }
    if (s.contains("variant")) {
        const auto v = s.at("variant").get<std::string>();
        if (v == "as_printed") {
            cfg.model.variant = FkVariant::AsPrinted;
        } else if (v == "mirrored") {
            cfg.model.variant = FkVariant::Mirrored;
        } else {
            throw ConfigError("kinematics.variant must be 'as_printed' or 'mirrored'");
        }
    }
    if (s.contains("joint_limits")) {
        const json& jl = s.at("joint_limits");
        std::set<std::string> names;
        for (std::size_t i = 0; i < kJointCount; ++i) names.insert(std::string(joint_name(static_cast<Joint>(i))));
        reject_unknown(jl, names, "kinematics.joint_limits");
        auto ranges = cfg.model.limits.ranges();
        for (std::size_t i = 0; i < kJointCount; ++i) {
            const std::string name(joint_name(static_cast<Joint>(i)));
            if (!jl.contains(name)) continue;
            const auto r = read_array<2>(jl.at(name), "joint_limits." + name);
            ranges[i] = {r[0], r[1]};
        }
        try {
            cfg.model.limits = JointLimitTable(ranges);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
}

void parse_solver(const json& s, BmaParams& p) {
    reject_unknown(s,
                   {"n_gen", "n_ind", "n_clones", "l_bm", "n_inf", "l_gt", "lm_prob", "lm_iter", "gamma_init", "tau",
                    "rng_seed", "target_cost", "fd_step"},
                   "solver");
    read(s, "n_gen", p.n_gen);
    read(s, "n_ind", p.n_ind);
    read(s, "n_clones", p.n_clones);
    read(s, "l_bm", p.l_bm);
    read(s, "n_inf", p.n_inf);
    read(s, "l_gt", p.l_gt);
    read(s, "lm_prob", p.lm_prob);
    read(s, "lm_iter", p.lm_iter);
    read(s, "gamma_init", p.gamma_init);
    read(s, "tau", p.tau);
    read(s, "rng_seed", p.rng_seed);
    read(s, "target_cost", p.target_cost);
    read(s, "fd_step", p.fd_step);
}

void parse_monitor(const json& s, MonitorConfig& m) {
    reject_unknown(s, {"period", "limit_factor", "arrival_tolerance", "speed_cap"}, "monitor");
    read(s, "period", m.period);
    read(s, "limit_factor", m.limit_factor);
    read(s, "arrival_tolerance", m.arrival_tolerance);
    read(s, "speed_cap", m.speed_cap);
}

Pose9 read_pose(const json& entry, const std::string& stem, const RobotModel& model, const std::string& where) {
    const bool has_pose = entry.contains(stem + "_pose");
    const bool has_angles = entry.contains(stem + "_angles");
    if (has_pose == has_angles) {
        throw ConfigError(where + " needs exactly one of " + stem + "_pose or " + stem + "_angles");
    }
    if (has_pose) return Pose9::from_flat(read_array<kPoseCoordinates>(entry.at(stem + "_pose"), where));
    const JointAngles a{read_array<kJointCount>(entry.at(stem + "_angles"), where)};
    return forward_kinematics(a, model.links, model.variant);
}

void parse_gesture(const json& s, RunConfig& cfg) {
    reject_unknown(s, {"tau_mood", "period", "library"}, "gesture");
    read(s, "tau_mood", cfg.tau_mood);
    read(s, "period", cfg.gesture_period);
    if (!s.contains("library")) return;
    const json& lib = s.at("library");
    if (!lib.is_array()) throw ConfigError("gesture.library must be an array");
    for (std::size_t i = 0; i < lib.size(); ++i) {
        const json& e = lib[i];
        const std::string where = "gesture.library[" + std::to_string(i) + "]";
        reject_unknown(e,
                       {"feeling", "neutral_pose", "neutral_angles", "peak_pose", "peak_angles", "speed_min",
                        "speed_max"},
                       where);
        MovementFunction fn;
        try {
            fn.feeling = parse_feeling(e.at("feeling").get<std::string>());
        } catch (const std::exception& ex) {
            throw ConfigError(where + ": " + ex.what());
        }
        fn.neutral_pose = read_pose(e, "neutral", cfg.model, where);
        fn.peak_pose = read_pose(e, "peak", cfg.model, where);
        read(e, "speed_min", fn.speed_min);
        read(e, "speed_max", fn.speed_max);
        try {
            cfg.library.add(fn);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(where + ": " + ex.what());
        }
    }
}

}  // namespace

const std::array<GestureAngles, kFeelingCount>& default_gesture_angles() {
    static const std::array<GestureAngles, kFeelingCount> table = {{
        {Feeling::Happiness, kRestAngles, angles(0.0, 2.5, 0.6, 0.4, 2.5, -0.6, -0.4, 0.4), 0.3, 1.5},
        {Feeling::Sadness, kRestAngles, angles(0.0, 0.1, 0.1, 0.1, 0.1, -0.1, -0.1, 1.1), 0.2, 0.6},
        {Feeling::Fright, kRestAngles, angles(0.0, 1.2, 1.4, 1.2, 1.2, -1.4, -1.2, 0.9), 0.5, 2.0},
        {Feeling::Fear, kRestAngles, angles(0.0, 0.6, 1.6, 1.0, 0.6, -1.6, -1.0, 1.0), 0.3, 1.2},
        {Feeling::Thrill, kRestAngles, angles(0.0, 2.9, 0.3, 0.2, 2.9, -0.3, -0.2, 0.3), 0.5, 2.0},
        {Feeling::Disgust, kRestAngles, angles(0.0, 1.0, 0.2, 1.2, 0.3, -0.2, -0.2, 0.9), 0.3, 1.0},
        {Feeling::Angriness, kRestAngles, angles(0.0, 1.6, 1.0, 0.8, 1.6, -1.0, -0.8, 0.5), 0.5, 1.8},
        {Feeling::Surprise, kRestAngles, angles(0.0, 2.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.25), 0.5, 1.8},
    }};
    return table;
}

MovementLibrary make_library(const std::array<GestureAngles, kFeelingCount>& gestures, const RobotModel& model) {
    MovementLibrary lib;
    for (const auto& g : gestures) {
        lib.add({g.feeling, forward_kinematics(g.neutral, model.links, model.variant),
                 forward_kinematics(g.peak, model.links, model.variant), g.speed_min, g.speed_max});
    }
    return lib;
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.initial_angles = kRestAngles;
    cfg.library = make_library(default_gesture_angles(), cfg.model);
    return cfg;
}

void RunConfig::validate() const {
    try {
        model.links.validate();
        bma.validate();
        monitor.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(std::isfinite(tau_mood) && tau_mood > 0.0)) throw ConfigError("gesture.tau_mood must be > 0");
    if (!(std::isfinite(gesture_period) && gesture_period > 0.0)) throw ConfigError("gesture.period must be > 0");
    if (!(std::isfinite(max_duration) && max_duration >= 0.0)) throw ConfigError("run.max_duration must be >= 0");
    if (!initial_angles.all_finite() || !model.limits.contains(initial_angles)) {
        throw ConfigError("runtime.initial_angles must lie within the joint limits");
    }
    for (std::size_t i = 0; i < kFeelingCount; ++i) {
        const auto feeling = static_cast<Feeling>(i);
        if (!library.contains(feeling)) {
            throw ConfigError("gesture.library has no entry for " + std::string(feeling_name(feeling)));
        }
        const auto& fn = library.at(feeling);
        for (const Pose9* pose : {&fn.neutral_pose, &fn.peak_pose}) {
            if (!within(pose->right_hand, model.links.arm_reach()) || !within(pose->left_hand, model.links.arm_reach()) ||
                !within(pose->head_center, model.links.head_reach())) {
                throw ConfigError("movement function for " + std::string(feeling_name(feeling)) +
                                  " leaves the reachable envelope");
            }
        }
        if (fn.speed_max > monitor.speed_cap) {
            throw ConfigError("movement speed for " + std::string(feeling_name(feeling)) + " exceeds speed_cap");
        }
    }
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg = default_run_config();
    reject_unknown(doc, {"kinematics", "solver", "monitor", "runtime", "gesture", "run"}, "config");
    if (doc.contains("kinematics")) {
        parse_kinematics(doc.at("kinematics"), cfg);
        // Default gestures follow the configured body unless overridden below.
        cfg.library = make_library(default_gesture_angles(), cfg.model);
    }
    try {
        if (doc.contains("solver")) parse_solver(doc.at("solver"), cfg.bma);
        if (doc.contains("monitor")) parse_monitor(doc.at("monitor"), cfg.monitor);
        if (doc.contains("runtime")) {
            const json& r = doc.at("runtime");
            reject_unknown(r, {"initial_angles"}, "runtime");
            if (r.contains("initial_angles")) {
                cfg.initial_angles = JointAngles{read_array<kJointCount>(r.at("initial_angles"), "runtime.initial_angles")};
            }
        }
        if (doc.contains("gesture")) parse_gesture(doc.at("gesture"), cfg);
        if (doc.contains("run")) {
            const json& r = doc.at("run");
            reject_unknown(r, {"seed", "max_duration"}, "run");
            read(r, "seed", cfg.seed);
            read(r, "max_duration", cfg.max_duration);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace partner
