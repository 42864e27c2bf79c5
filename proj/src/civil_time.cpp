#include "commuteflow/civil_time.hpp"

#include <chrono>
#include <cstdio>

namespace commuteflow {

namespace chr = std::chrono;

namespace {

bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

UnixSeconds to_unix(const chr::sys_days& d) {
  return static_cast<UnixSeconds>(d.time_since_epoch().count()) * kSecondsPerDay;
}

chr::sys_days day_of(UnixSeconds t) {
  const UnixSeconds days = t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
  return chr::sys_days{chr::days{days}};
}

// Transition instants (UTC) for the year containing t.
std::pair<UnixSeconds, UnixSeconds> bst_bounds(int year) {
  const chr::year y{year};
  const chr::sys_days start{y / chr::March / chr::Sunday[chr::last]};
  const chr::sys_days end{y / chr::October / chr::Sunday[chr::last]};
  return {to_unix(start) + 3600, to_unix(end) + 3600};
}

}  // namespace

std::optional<UnixSeconds> parse_iso8601_utc(std::string_view s) {
  int year = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0;
  if (s.size() < 20) return std::nullopt;
  if (!parse_digits(s, 0, 4, year) || s[4] != '-' || !parse_digits(s, 5, 2, month) || s[7] != '-' ||
      !parse_digits(s, 8, 2, day) || (s[10] != 'T' && s[10] != 't') || !parse_digits(s, 11, 2, hh) ||
      s[13] != ':' || !parse_digits(s, 14, 2, mm) || s[16] != ':' || !parse_digits(s, 17, 2, ss)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  const std::string_view zone = s.substr(pos);
  if (zone != "Z" && zone != "z" && zone != "+00:00") return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                chr::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  return to_unix(chr::sys_days{ymd}) + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601_utc(UnixSeconds t) {
  const chr::sys_days d = day_of(t);
  const UnixSeconds sod = t - to_unix(d);
  const chr::year_month_day ymd{d};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(sod / 3600),
                static_cast<int>(sod % 3600 / 60), static_cast<int>(sod % 60));
  return buf;
}

int uk_utc_offset_seconds(UnixSeconds utc) {
  const chr::year_month_day ymd{day_of(utc)};
  const auto [start, end] = bst_bounds(static_cast<int>(ymd.year()));
  return utc >= start && utc < end ? 3600 : 0;
}

CivilSlot uk_civil_slot(UnixSeconds utc) {
  const UnixSeconds local = utc + uk_utc_offset_seconds(utc);
  const chr::sys_days d = day_of(local);
  const int hour = static_cast<int>((local - to_unix(d)) / 3600);
  const chr::weekday wd{d};
  const bool weekend = wd == chr::Saturday || wd == chr::Sunday;
  return {hour, weekend ? DayClass::weekend : DayClass::weekday};
}

UnixSeconds uk_local_to_utc(UnixSeconds local_as_utc) {
  const UnixSeconds summer = local_as_utc - 3600;
  if (uk_utc_offset_seconds(summer) == 3600) return summer;
  // Winter time, or inside the skipped spring hour (which then reads one hour later).
  return local_as_utc;
}

int weekday_index(UnixSeconds t) {
  return static_cast<int>(chr::weekday{day_of(t)}.iso_encoding()) - 1;
}

}  // namespace commuteflow
