#pragma once

#include "sosg/common.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace sosg {

enum class TimestampFormat : std::uint8_t { Iso8601, EpochSeconds, EpochMillis, EpochMicros };

std::optional<TimestampFormat> parse_timestamp_format(std::string_view name);
std::string_view to_string(TimestampFormat format);

/// Parses `YYYY-MM-DD[T ]hh:mm:ss[.frac][Z|+hh:mm|-hh:mm]`. A missing zone is
/// read as UTC. Fractions beyond microseconds are truncated.
std::optional<Micros> parse_iso8601(std::string_view text);

std::optional<Micros> parse_timestamp(std::string_view text, TimestampFormat format);

/// Canonical rendering: `YYYY-MM-DDThh:mm:ss.ffffffZ`.
std::string format_iso8601(Micros t);

}  // namespace sosg
