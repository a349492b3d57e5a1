#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "partner/motion_runtime.hpp"

using namespace partner;

namespace {

MotorCommand uniform_command(const JointAngles& targets, double speed) {
    MotorCommand c;
    c.targets = targets;
    c.speeds.fill(speed);
    return c;
}

JointAngles rest() {
    JointAngles a;
    a[Joint::Head] = 0.5;
    return a;
}

std::vector<TimedEvent> blocked_events(const std::vector<TimedEvent>& trace) {
    std::vector<TimedEvent> out;
    for (const auto& e : trace) {
        if (std::holds_alternative<BlockedEvent>(e.event)) out.push_back(e);
    }
    return out;
}

}  // namespace

TEST_SUITE("motion_runtime") {

TEST_CASE("simulate_step advances, holds and clamps") {
    MotorBank bank = make_bank(JointAngles{});
    bank[0].target = 1.0;
    bank[0].commanded_speed = 0.5;
    bank[0].moving = true;
    bank = simulate_step(bank, 0.1, 0.005);
    CHECK(bank[0].position == doctest::Approx(0.05).epsilon(1e-15));

    bank[1].target = 1.0;
    bank[1].commanded_speed = 0.5;
    bank[1].moving = true;
    bank[1].obstructed_fraction = 0.0;
    bank = simulate_step(bank, 0.1, 0.005);
    CHECK(bank[1].position == 0.0);
    CHECK(bank[1].moving);

    bank[2].position = 0.999;
    bank[2].target = 1.0;
    bank[2].commanded_speed = 0.5;
    bank[2].moving = true;
    bank = simulate_step(bank, 0.1, 0.005);
    CHECK(bank[2].position == 1.0);
    CHECK_FALSE(bank[2].moving);

    bank[3].position = 0.5;
    bank[3].target = -0.5;
    bank[3].commanded_speed = 1.0;
    bank[3].moving = true;
    bank = simulate_step(bank, 0.1, 0.005);
    CHECK(bank[3].position == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("estimate_speeds") {
    MotorVector prev{}, cur{};
    cur[0] = 0.05;
    cur[1] = -0.09372;
    const auto v = estimate_speeds(prev, cur, 0.1);
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.9372).epsilon(1e-14));
    CHECK(v[2] == 0.0);
}

TEST_CASE("check_blocking threshold") {
    const MonitorConfig cfg;
    auto moving_bank = [] {
        MotorBank bank = make_bank(JointAngles{});
        for (auto& m : bank) {
            m.target = 1.0;
            m.moving = true;
        }
        return bank;
    };
    MotorCommand cmd;
    cmd.speeds.fill(1.0);

    MotorVector est{};
    est.fill(1.0);
    est[4] = 0.93;
    MotorBank bank = moving_bank();
    auto ev = check_blocking(est, cmd, bank, cfg);
    REQUIRE(ev);
    CHECK(ev->motor == 4);
    CHECK(ev->threshold == doctest::Approx(0.9372));
    for (const auto& m : bank) CHECK_FALSE(m.moving);

    est[4] = 0.95;
    bank = moving_bank();
    CHECK_FALSE(check_blocking(est, cmd, bank, cfg));
    for (const auto& m : bank) CHECK(m.moving);

    cmd.speeds.fill(0.5);
    est.fill(0.5);
    est[6] = 0.47;
    bank = moving_bank();
    CHECK_FALSE(check_blocking(est, cmd, bank, cfg));  // 0.47 > 0.4686
    est[6] = 0.46;
    est[2] = 0.40;
    bank = moving_bank();
    ev = check_blocking(est, cmd, bank, cfg);
    REQUIRE(ev);
    CHECK(ev->motor == 2);  // lowest index wins
}

TEST_CASE("check_blocking skips idle and arrived motors") {
    const MonitorConfig cfg;
    MotorCommand cmd;
    cmd.speeds.fill(1.0);
    MotorBank bank = make_bank(JointAngles{});
    bank[0].target = 0.003;
    bank[0].moving = true;  // within the arrival tolerance
    MotorVector est{};
    CHECK_FALSE(check_blocking(est, cmd, bank, cfg));
}

TEST_CASE("free motion arrives without blocking") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::RightShoulder] = 1.0;
    target[Joint::LeftElbow] = -1.0;
    const auto trace = run_motion(uniform_command(target, 0.5), {}, cfg, rest());
    REQUIRE_FALSE(trace.empty());
    CHECK(std::holds_alternative<ArrivedEvent>(trace.back().event));
    CHECK(blocked_events(trace).empty());
    // 1 rad at 0.5 rad/s; arrival counts from within the tolerance.
    CHECK(trace.back().time >= 1.98);
    CHECK(trace.back().time <= 2.0 + 1e-9);
}

TEST_CASE("a short degraded window below the limit is enough") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::Waist] = 1.5;
    // Held from 0.39: the 0.3..0.4 window moved 0.09 rad, under 0.09372.
    const Obstruction obstacle{0, 0.39, 10.0, 0.0};
    const auto trace = run_motion(uniform_command(target, 1.0), std::span(&obstacle, 1), cfg, rest());
    const auto blocks = blocked_events(trace);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].time == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("full obstruction is detected at the first sample that sees it") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::RightElbow] = 1.5;
    const Obstruction obstacle{2, 0.35, 10.0, 0.0};
    const auto trace = run_motion(uniform_command(target, 1.0), std::span(&obstacle, 1), cfg, rest());
    const auto blocks = blocked_events(trace);
    REQUIRE(blocks.size() == 1);
    // The window 0.3..0.4 contains only 0.05 s of motion: 0.5 rad/s < 0.9372.
    CHECK(blocks[0].time == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(std::get<BlockedEvent>(blocks[0].event).motor == 2);
    CHECK(std::get<BlockedEvent>(blocks[0].event).estimated_speed == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(trace.back().time == blocks[0].time);
}

TEST_CASE("obstruction just before a sample is caught one period later") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::Waist] = 1.5;
    // Starts snap up to the 0.01 s step grid: this one begins at 0.40, so the
    // 0.3..0.4 window is clean and the 0.4..0.5 window is fully held.
    const Obstruction obstacle{0, 0.395, 10.0, 0.0};
    const auto trace = run_motion(uniform_command(target, 1.0), std::span(&obstacle, 1), cfg, rest());
    const auto blocks = blocked_events(trace);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].time == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mild drag above the limit is tolerated") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::Waist] = 1.5;
    const Obstruction drag{0, 0.0, 100.0, 0.95};
    const auto trace = run_motion(uniform_command(target, 1.0), std::span(&drag, 1), cfg, rest());
    CHECK(blocked_events(trace).empty());
    CHECK(std::holds_alternative<ArrivedEvent>(trace.back().event));
}

TEST_CASE("blocked runtime stops every motor and reports once") {
    const MonitorConfig cfg;
    MotionRuntime rt(cfg, JointLimitTable{}, rest());
    JointAngles target = rest();
    target[Joint::Waist] = 1.0;
    target[Joint::RightShoulder] = 2.0;
    rt.schedule({1, 0.2, 5.0, 0.0});
    rt.send(encode_message(uniform_command(target, 1.0)));
    rt.advance_to(3.0);
    CHECK(rt.blocked());
    CHECK(rt.idle());
    CHECK(blocked_events(rt.trace()).size() == 1);
    const double waist = rt.motors()[0].position;
    rt.advance_to(4.0);
    CHECK(rt.motors()[0].position == waist);

    std::vector<std::string> lines;
    while (auto l = rt.receive()) lines.push_back(*l);
    CHECK(std::count(lines.begin(), lines.end(), std::string("BLOCKED 1\n")) == 1);
    CHECK(std::none_of(lines.begin(), lines.end(), [](const std::string& l) { return l == "ARRIVED\n"; }));
}

TEST_CASE("telemetry is emitted every period") {
    const MonitorConfig cfg;
    MotionRuntime rt(cfg, JointLimitTable{}, rest());
    rt.advance_to(1.0);
    int pos = 0;
    while (auto l = rt.receive()) {
        const auto msg = decode_message(*l);
        REQUIRE(std::holds_alternative<PositionMessage>(msg));
        ++pos;
        CHECK(std::get<PositionMessage>(msg).time == doctest::Approx(0.1 * pos).epsilon(1e-12));
    }
    CHECK(pos == 10);
    CHECK(rt.now() == doctest::Approx(1.0));
}

TEST_CASE("runtime rejects invalid commands") {
    const MonitorConfig cfg;
    MotionRuntime rt(cfg, JointLimitTable{}, rest());
    JointAngles bad = rest();
    bad[Joint::Head] = 3.0;
    CHECK_THROWS_AS(rt.apply(uniform_command(bad, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(rt.apply(uniform_command(rest(), 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(rt.apply(uniform_command(rest(), 100.0)), std::invalid_argument);
    CHECK_THROWS_AS(rt.apply(BlockedMessage{1}), std::invalid_argument);
    CHECK_THROWS_AS(rt.schedule({9, 0.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(rt.schedule({0, 0.0, 1.0, 1.5}), std::invalid_argument);
}

TEST_CASE("STOP halts motion") {
    const MonitorConfig cfg;
    MotionRuntime rt(cfg, JointLimitTable{}, rest());
    JointAngles target = rest();
    target[Joint::Waist] = 1.0;
    rt.apply(uniform_command(target, 1.0));
    rt.advance_to(0.25);
    rt.send(encode_message(StopMessage{}));
    rt.advance_to(1.0);
    CHECK(rt.idle());
    CHECK(rt.motors()[0].position == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(blocked_events(rt.trace()).empty());
}

TEST_CASE("run_motion is deterministic") {
    const MonitorConfig cfg;
    JointAngles target = rest();
    target[Joint::Waist] = 1.0;
    target[Joint::Head] = 1.1;
    const Obstruction o{7, 0.15, 0.2, 0.5};
    const auto a = run_motion(uniform_command(target, 0.8), std::span(&o, 1), cfg, rest());
    const auto b = run_motion(uniform_command(target, 0.8), std::span(&o, 1), cfg, rest());
    CHECK(a == b);
    std::ostringstream sa, sb;
    write_trace_jsonl(a, sa);
    write_trace_jsonl(b, sb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("\"event\":\"BLOCKED\"") != std::string::npos);
}

TEST_CASE("monitor configuration validation") {
    MonitorConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.limit_factor = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg = MonitorConfig{};
    cfg.period = 0.0;
    CHECK_THROWS(cfg.validate());
    CHECK(MonitorConfig{}.step() == doctest::Approx(0.01));
}

}  // TEST_SUITE

TEST_SUITE("protocol") {

TEST_CASE("all-zero MOVE") {
    const MotorCommand zero;
    const std::string line = encode_message(zero);
    std::string want = "MOVE";
    for (int i = 0; i < 16; ++i) want += " 0.000000";
    want += '\n';
    CHECK(line == want);
    CHECK(std::get<MotorCommand>(decode_message(line)) == zero);
}

TEST_CASE("literal messages") {
    CHECK(std::get<BlockedMessage>(decode_message("BLOCKED 3\n")).motor == 3);
    CHECK(std::holds_alternative<StopMessage>(decode_message("STOP")));
    CHECK(std::holds_alternative<ArrivedMessage>(decode_message("ARRIVED\n")));
    CHECK(encode_message(StopMessage{}) == "STOP\n");
    CHECK(encode_message(ArrivedMessage{}) == "ARRIVED\n");
    CHECK(encode_message(BlockedMessage{7}) == "BLOCKED 7\n");
}

TEST_CASE("random messages round-trip exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> any(-4.0, 4.0);
    std::uniform_real_distribution<double> tiny(-1e-9, 1e-9);
    for (int i = 0; i < 2000; ++i) {
        MotorCommand cmd;
        for (auto& t : cmd.targets.q) t = i % 3 == 0 ? tiny(rng) : any(rng);
        for (auto& v : cmd.speeds) v = std::abs(any(rng));
        REQUIRE(std::get<MotorCommand>(decode_message(encode_message(cmd))) == cmd);

        PositionMessage pos;
        pos.time = std::abs(any(rng)) * 1000.0;
        for (auto& p : pos.positions) p = any(rng);
        REQUIRE(std::get<PositionMessage>(decode_message(encode_message(pos))) == pos);
    }
    for (std::size_t m = 0; m < kJointCount; ++m) {
        CHECK(std::get<BlockedMessage>(decode_message(encode_message(BlockedMessage{m}))).motor == m);
    }
}

TEST_CASE("format_real keeps at least six fractional digits") {
    CHECK(format_real(1.0) == "1.000000");
    CHECK(format_real(-0.5) == "-0.500000");
    CHECK(format_real(0.1) == "0.100000");
    CHECK(format_real(0.123456789) == "0.123456789");
    CHECK_THROWS(format_real(std::numeric_limits<double>::infinity()));
}

TEST_CASE("malformed lines are rejected with an offset") {
    auto offset_of = [](std::string_view line) -> long {
        try {
            decode_message(line);
        } catch (const MalformedMessage& e) {
            return static_cast<long>(e.offset());
        }
        return -1;
    };
    CHECK(offset_of("MOVE 1.0") >= 0);
    CHECK(offset_of("MOVE 1.000000") == 13);  // missing second field
    CHECK(offset_of("") == 0);
    CHECK(offset_of("HELLO") == 0);
    CHECK(offset_of("BLOCKED 8") == 8);
    CHECK(offset_of("BLOCKED 03") == 8);
    CHECK(offset_of("BLOCKED x") == 8);
    CHECK(offset_of("BLOCKED") == 7);
    CHECK(offset_of("BLOCKED  3") == 8);
    CHECK(offset_of("STOP ") == 4);
    CHECK(offset_of("STOP now") == 4);
    CHECK(offset_of("ARRIVED\r\n") == 7);
    CHECK(offset_of("POS 1.00000 0.000000") == 4);  // five fractional digits
    CHECK(offset_of("POS 1e5") == 5);
    CHECK(offset_of("POS .500000") == 4);
    CHECK(offset_of("POS +1.000000") == 4);
    CHECK(offset_of("move") == 0);
    std::string twice = encode_message(StopMessage{});
    twice += '\n';
    CHECK(offset_of(twice) == 4);
}

}  // TEST_SUITE
