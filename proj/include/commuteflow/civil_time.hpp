#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace commuteflow {

/// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerDay = 86400;

enum class DayClass : int { weekday = 0, weekend = 1 };

/// Accepts `YYYY-MM-DDTHH:MM:SS` with optional fractional seconds (truncated)
/// followed by `Z` or `+00:00`.
std::optional<UnixSeconds> parse_iso8601_utc(std::string_view s);
std::string format_iso8601_utc(UnixSeconds t);

/// UK civil time offset from UTC: one hour from 01:00 UTC on the last Sunday
/// of March until 01:00 UTC on the last Sunday of October, else zero.
int uk_utc_offset_seconds(UnixSeconds utc);

struct CivilSlot {
  int hour = 0;  // 0..23 local
  DayClass day_class = DayClass::weekday;
};

CivilSlot uk_civil_slot(UnixSeconds utc);

/// Inverse of the UK offset for a local wall-clock instant expressed as if it
/// were UTC. Nonexistent spring-forward times map one hour later.
UnixSeconds uk_local_to_utc(UnixSeconds local_as_utc);

/// Day of week of the UTC date containing t, 0 = Monday.
int weekday_index(UnixSeconds t);

}  // namespace commuteflow
