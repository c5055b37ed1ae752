#include "sosg/time_util.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace sosg {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Query: return "query";
    case ErrorKind::Invariant: return "invariant";
    case ErrorKind::Corrupt: return "corrupt";
    case ErrorKind::Internal: return "internal";
    }
    return "internal";
}

std::string_view to_string(VertexCategory category) {
    switch (category) {
    case VertexCategory::Entity: return "Entity";
    case VertexCategory::State: return "State";
    case VertexCategory::Event: return "Event";
    }
    return "Entity";
}

std::optional<TimestampFormat> parse_timestamp_format(std::string_view name) {
    if (name == "iso8601") return TimestampFormat::Iso8601;
    if (name == "epoch_s") return TimestampFormat::EpochSeconds;
    if (name == "epoch_ms") return TimestampFormat::EpochMillis;
    if (name == "epoch_us") return TimestampFormat::EpochMicros;
    return std::nullopt;
}

std::string_view to_string(TimestampFormat format) {
    switch (format) {
    case TimestampFormat::Iso8601: return "iso8601";
    case TimestampFormat::EpochSeconds: return "epoch_s";
    case TimestampFormat::EpochMillis: return "epoch_ms";
    case TimestampFormat::EpochMicros: return "epoch_us";
    }
    return "iso8601";
}

namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > text.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = text[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += count;
    out = value;
    return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
    if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

}  // namespace

std::optional<Micros> parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') ||
        !read_digits(text, pos, 2, mo) || !expect(text, pos, '-') ||
        !read_digits(text, pos, 2, d)) {
        return std::nullopt;
    }
    if (!(expect(text, pos, 'T') || expect(text, pos, 't') || expect(text, pos, ' '))) {
        return std::nullopt;
    }
    if (!read_digits(text, pos, 2, h) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, mi) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, s)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;

    Micros frac = 0;
    if (expect(text, pos, '.') || expect(text, pos, ',')) {
        int digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 6) frac = frac * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 6; ++i) frac *= 10;
    }

    Micros offset_us = 0;
    if (pos < text.size()) {
        char z = text[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            ++pos;
            int oh = 0, om = 0;
            if (!read_digits(text, pos, 2, oh)) return std::nullopt;
            expect(text, pos, ':');
            if (!read_digits(text, pos, 2, om)) return std::nullopt;
            offset_us = (static_cast<Micros>(oh) * 3600 + om * 60) * 1'000'000;
            if (z == '-') offset_us = -offset_us;
        }
    }
    if (pos != text.size()) return std::nullopt;

    auto days = sys_days{ymd}.time_since_epoch().count();
    Micros secs = static_cast<Micros>(days) * 86400 + h * 3600 + mi * 60 + s;
    return secs * 1'000'000 + frac - offset_us;
}

std::optional<Micros> parse_timestamp(std::string_view text, TimestampFormat format) {
    if (format == TimestampFormat::Iso8601) return parse_iso8601(text);
    if (text.empty()) return std::nullopt;

    // Integer part plus optional fractional digits, no exponent.
    std::size_t dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view fraction = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    Micros integer = 0;
    auto [ptr, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), integer);
    if (ec != std::errc{} || ptr != whole.data() + whole.size()) return std::nullopt;

    Micros scale = format == TimestampFormat::EpochSeconds ? 1'000'000
                 : format == TimestampFormat::EpochMillis ? 1'000
                                                          : 1;
    Micros frac_us = 0;
    if (dot != std::string_view::npos) {
        if (fraction.empty()) return std::nullopt;
        Micros unit = scale;
        for (char c : fraction) {
            if (c < '0' || c > '9') return std::nullopt;
            unit /= 10;
            frac_us += (c - '0') * unit;
        }
        if (integer < 0) frac_us = -frac_us;
    }
    return integer * scale + frac_us;
}

std::string format_iso8601(Micros t) {
    using namespace std::chrono;
    Micros secs = t >= 0 ? t / 1'000'000 : -((-t + 999'999) / 1'000'000);
    Micros frac = t - secs * 1'000'000;
    Micros days = secs >= 0 ? secs / 86400 : -((-secs + 86399) / 86400);
    Micros rem = secs - days * 86400;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%06dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                  static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60), static_cast<int>(frac));
    return buf;
}

}  // namespace sosg
