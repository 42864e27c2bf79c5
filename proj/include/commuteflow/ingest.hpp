#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commuteflow/civil_time.hpp"
#include "commuteflow/geo.hpp"

namespace commuteflow::ingest {

struct EventRecord {
  std::string user_id;
  UnixSeconds ts = 0;
  geo::EventLocation location;
};

/// Parses one JSON Lines event. On failure returns nullopt and, if `error` is
/// non-null, a short reason.
std::optional<EventRecord> parse_event_line(std::string_view line, std::string* error = nullptr);
std::string to_json_line(const EventRecord& e);

struct ParsedEvents {
  std::vector<EventRecord> events;
  std::size_t lines = 0;
  std::size_t parse_errors = 0;
};

/// Streams events to `sink`; malformed lines are tallied and skipped.
/// Returns {lines, parse_errors}.
std::pair<std::size_t, std::size_t> for_each_event(std::istream& in,
                                                   const std::function<void(EventRecord&&)>& sink);
ParsedEvents parse_events(std::istream& in);
/// Throws std::runtime_error when the file cannot be opened.
ParsedEvents parse_events_file(const std::string& path);

/// Slot index into RegionVisit::cells: day_class * 24 + local hour.
inline constexpr std::size_t kSlots = 48;
inline std::size_t slot_index(DayClass d, int hour) { return static_cast<std::size_t>(d) * 24 + static_cast<std::size_t>(hour); }

struct SlotStats {
  std::uint64_t count = 0;
  UnixSeconds first = 0;
  UnixSeconds last = 0;

  void add(UnixSeconds t);
  void merge(const SlotStats& other);
  bool operator==(const SlotStats&) const = default;
};

struct RegionVisit {
  std::string region;
  std::uint64_t tweet_count = 0;
  UnixSeconds first_seen = 0;
  UnixSeconds last_seen = 0;
  std::array<SlotStats, kSlots> slots{};  // per (day class, local hour)

  void add(UnixSeconds t);
  /// Associative and commutative: sums counts, takes min/max instants.
  void merge(const RegionVisit& other);
  std::uint64_t hourly_count(DayClass d, int hour) const { return slots[slot_index(d, hour)].count; }
  bool operator==(const RegionVisit&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::map<std::string, RegionVisit> visits;
  std::uint64_t total_assigned = 0;

  void merge(const UserProfile& other);
  bool operator==(const UserProfile&) const = default;
};

using ProfileMap = std::map<std::string, UserProfile>;

/// Visits ordered by count (desc), then first_seen (asc), then region id.
std::vector<const RegionVisit*> ranked_visits(const UserProfile& p);

struct BuildTally {
  std::size_t assigned = 0;
  std::size_t unresolved = 0;
};

/// Incremental profile aggregation. Builders over disjoint parts of a stream
/// can be merged in any order with identical results.
class ProfileBuilder {
 public:
  explicit ProfileBuilder(const geo::RegionSet& regions) : regions_(&regions) {}

  /// Returns false when the event's location does not resolve to a region.
  bool add(const EventRecord& e);
  void merge(const ProfileBuilder& other);

  const ProfileMap& profiles() const { return profiles_; }
  ProfileMap take_profiles() { return std::move(profiles_); }
  const BuildTally& tally() const { return tally_; }

 private:
  const geo::RegionSet* regions_;
  ProfileMap profiles_;
  BuildTally tally_;
};

struct BuildResult {
  ProfileMap profiles;
  BuildTally tally;
};

BuildResult build_profiles(std::span<const EventRecord> events, const geo::RegionSet& rs);

struct FilterOptions {
  std::uint64_t min_tweets = 5;
  std::int64_t min_span_days = 30;
};

/// Keeps a user iff total_assigned >= min_tweets and each of the (up to) two
/// most-tweeted regions spans at least min_span_days between first and last
/// tweet.
bool passes_filter(const UserProfile& p, const FilterOptions& opt);
ProfileMap filter_users(const ProfileMap& profiles, const FilterOptions& opt = {});

// Profile cache: JSON Lines. The first line is a header
//   {"format":"commuteflow-profiles","version":1,"regions":[ids...]}
// and each subsequent line one user:
//   {"user_id":..,"total":..,"visits":[{"region":..,"count":..,"first":..,"last":..,
//     "slots":[[slot,count,first,last],...]}]}
// with instants as Unix seconds and only non-empty slots listed.
void write_profile_cache(std::ostream& out, const ProfileMap& profiles, const std::vector<std::string>& region_ids);

struct ProfileCache {
  std::vector<std::string> region_ids;
  ProfileMap profiles;
};

ProfileCache read_profile_cache(std::istream& in);
ProfileCache read_profile_cache_file(const std::string& path);

}  // namespace commuteflow::ingest
