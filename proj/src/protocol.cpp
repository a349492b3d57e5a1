#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "partner/motion_runtime.hpp"

namespace partner {

namespace {

constexpr std::size_t kMinFractionDigits = 6;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Splits a line into single-space separated tokens and reports offsets.
class Cursor {
public:
    explicit Cursor(std::string_view line) : line_(line) {}

    std::string_view keyword() {
        const std::size_t end = line_.find(' ');
        const std::string_view word = line_.substr(0, end);
        if (word.empty()) throw MalformedMessage("empty message", 0);
        pos_ = word.size();
        last_start_ = 0;
        return word;
    }

    std::string_view field() {
        if (pos_ >= line_.size()) throw MalformedMessage("missing field", pos_);
        if (line_[pos_] != ' ') throw MalformedMessage("expected single space", pos_);
        ++pos_;
        const std::size_t start = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
        if (pos_ == start) throw MalformedMessage("empty field", start);
        last_start_ = start;
        return line_.substr(start, pos_ - start);
    }

    double real() {
        const std::string_view tok = field();
        std::size_t i = 0;
        if (tok[i] == '-') ++i;
        const std::size_t int_start = i;
        while (i < tok.size() && is_digit(tok[i])) ++i;
        if (i == int_start || i >= tok.size() || tok[i] != '.') {
            throw MalformedMessage("malformed decimal", last_start_ + i);
        }
        ++i;
        const std::size_t frac_start = i;
        while (i < tok.size() && is_digit(tok[i])) ++i;
        if (i != tok.size()) throw MalformedMessage("unexpected character in decimal", last_start_ + i);
        if (i - frac_start < kMinFractionDigits) {
            throw MalformedMessage("decimal needs at least six fractional digits", last_start_);
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
            throw MalformedMessage("decimal out of range", last_start_);
        }
        return value;
    }

    std::size_t index(std::size_t limit) {
        const std::string_view tok = field();
        std::size_t value = 0;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (!is_digit(tok[i])) throw MalformedMessage("malformed index", last_start_ + i);
        }
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || value >= limit || (tok.size() > 1 && tok[0] == '0')) {
            throw MalformedMessage("motor index out of range", last_start_);
        }
        return value;
    }

    void finish() const {
        if (pos_ != line_.size()) throw MalformedMessage("trailing characters", pos_);
    }

private:
    std::string_view line_;
    std::size_t pos_ = 0;
    std::size_t last_start_ = 0;
};

void append_reals(std::string& out, const MotorVector& values) {
    for (double v : values) {
        out += ' ';
        out += format_real(v);
    }
}

}  // namespace

MalformedMessage::MalformedMessage(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

std::string format_real(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("cannot encode a non-finite value");
    char buf[512];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
    if (ec != std::errc{}) throw std::invalid_argument("value too large to encode");
    std::string s(buf, ptr);
    std::size_t dot = s.find('.');
    if (dot == std::string::npos) {
        s += '.';
        dot = s.size() - 1;
    }
    const std::size_t fraction = s.size() - dot - 1;
    if (fraction < kMinFractionDigits) s.append(kMinFractionDigits - fraction, '0');
    return s;
}

std::string encode_message(const Message& message) {
    std::string out;
    std::visit(
        [&out](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MotorCommand>) {
                out = "MOVE";
                append_reals(out, m.targets.q);
                append_reals(out, m.speeds);
            } else if constexpr (std::is_same_v<T, StopMessage>) {
                out = "STOP";
            } else if constexpr (std::is_same_v<T, PositionMessage>) {
                out = "POS " + format_real(m.time);
                append_reals(out, m.positions);
            } else if constexpr (std::is_same_v<T, BlockedMessage>) {
                if (m.motor >= kJointCount) throw std::invalid_argument("motor index out of range");
                out = "BLOCKED " + std::to_string(m.motor);
            } else {
                out = "ARRIVED";
            }
        },
        message);
    out += '\n';
    return out;
}

Message decode_message(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    for (std::size_t i = 0; i < line.size(); ++i) {
        const auto c = static_cast<unsigned char>(line[i]);
        if (c < 0x20 || c > 0x7e) throw MalformedMessage("non-printable byte", i);
    }

    Cursor cur(line);
    const std::string_view kw = cur.keyword();
    Message out;
    if (kw == "MOVE") {
        MotorCommand cmd;
        for (auto& t : cmd.targets.q) t = cur.real();
        for (auto& v : cmd.speeds) v = cur.real();
        out = cmd;
    } else if (kw == "STOP") {
        out = StopMessage{};
    } else if (kw == "POS") {
        PositionMessage pos;
        pos.time = cur.real();
        for (auto& p : pos.positions) p = cur.real();
        out = pos;
    } else if (kw == "BLOCKED") {
        out = BlockedMessage{cur.index(kJointCount)};
    } else if (kw == "ARRIVED") {
        out = ArrivedMessage{};
    } else {
        throw MalformedMessage("unknown message kind", 0);
    }
    cur.finish();
    return out;
}

}  // namespace partner
