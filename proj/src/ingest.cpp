#include "commuteflow/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>

#include "json.hpp"

namespace commuteflow::ingest {

using json = nlohmann::json;

namespace {

bool fail(std::string* error, const char* why) {
  if (error) *error = why;
  return false;
}

bool read_location(const json& obj, geo::EventLocation& out, std::string* error) {
  const bool has_point = obj.contains("point") && !obj["point"].is_null();
  const bool has_place = obj.contains("place") && !obj["place"].is_null();
  if (has_point == has_place) return fail(error, has_point ? "both point and place present" : "no location");

  if (has_point) {
    const auto& p = obj["point"];
    if (!p.is_object() || !p.contains("lon") || !p.contains("lat") || !p["lon"].is_number() ||
        !p["lat"].is_number()) {
      return fail(error, "malformed point");
    }
    geo::GeoPoint pt{p["lon"].get<double>(), p["lat"].get<double>()};
    if (!geo::is_valid(pt)) return fail(error, "point out of range");
    out = pt;
    return true;
  }

  const auto& pl = obj["place"];
  if (!pl.is_object() || !pl.contains("bbox") || !pl["bbox"].is_array() || pl["bbox"].size() != 4) {
    return fail(error, "malformed place bbox");
  }
  for (const auto& v : pl["bbox"]) {
    if (!v.is_number()) return fail(error, "malformed place bbox");
  }
  if (!pl.contains("type") || !pl["type"].is_string()) return fail(error, "missing place type");
  const auto type = geo::parse_place_type(pl["type"].get<std::string>());
  if (!type) return fail(error, "unknown place type");
  const auto& b = pl["bbox"];
  geo::BoundingBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>(), *type};
  if (!geo::is_valid(box)) return fail(error, "invalid bbox");
  out = box;
  return true;
}

}  // namespace

std::optional<EventRecord> parse_event_line(std::string_view line, std::string* error) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    fail(error, "not a JSON object");
    return std::nullopt;
  }
  EventRecord e;
  if (!obj.contains("user_id") || !obj["user_id"].is_string() || obj["user_id"].get_ref<const std::string&>().empty()) {
    fail(error, "missing user_id");
    return std::nullopt;
  }
  e.user_id = obj["user_id"].get<std::string>();
  if (!obj.contains("ts") || !obj["ts"].is_string()) {
    fail(error, "missing ts");
    return std::nullopt;
  }
  const auto ts = parse_iso8601_utc(obj["ts"].get_ref<const std::string&>());
  if (!ts) {
    fail(error, "ts is not ISO-8601 UTC");
    return std::nullopt;
  }
  e.ts = *ts;
  if (!read_location(obj, e.location, error)) return std::nullopt;
  return e;
}

std::string to_json_line(const EventRecord& e) {
  json obj = {{"user_id", e.user_id}, {"ts", format_iso8601_utc(e.ts)}};
  if (const auto* p = std::get_if<geo::GeoPoint>(&e.location)) {
    obj["point"] = {{"lon", p->lon}, {"lat", p->lat}};
  } else {
    const auto& b = std::get<geo::BoundingBox>(e.location);
    obj["place"] = {{"bbox", {b.west, b.south, b.east, b.north}}, {"type", std::string(geo::to_string(b.place_type))}};
  }
  return obj.dump();
}

std::pair<std::size_t, std::size_t> for_each_event(std::istream& in, const std::function<void(EventRecord&&)>& sink) {
  std::size_t lines = 0;
  std::size_t errors = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lines;
    if (auto e = parse_event_line(line)) {
      sink(std::move(*e));
    } else {
      ++errors;
    }
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading events");
  return {lines, errors};
}

ParsedEvents parse_events(std::istream& in) {
  ParsedEvents out;
  std::tie(out.lines, out.parse_errors) = for_each_event(in, [&](EventRecord&& e) { out.events.push_back(std::move(e)); });
  return out;
}

ParsedEvents parse_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open events file " + path);
  return parse_events(in);
}

void SlotStats::add(UnixSeconds t) {
  if (count == 0) {
    first = last = t;
  } else {
    first = std::min(first, t);
    last = std::max(last, t);
  }
  ++count;
}

void SlotStats::merge(const SlotStats& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  count += other.count;
  first = std::min(first, other.first);
  last = std::max(last, other.last);
}

void RegionVisit::add(UnixSeconds t) {
  if (tweet_count == 0) {
    first_seen = last_seen = t;
  } else {
    first_seen = std::min(first_seen, t);
    last_seen = std::max(last_seen, t);
  }
  ++tweet_count;
  const CivilSlot s = uk_civil_slot(t);
  slots[slot_index(s.day_class, s.hour)].add(t);
}

void RegionVisit::merge(const RegionVisit& other) {
  if (other.tweet_count == 0) return;
  if (tweet_count == 0) {
    first_seen = other.first_seen;
    last_seen = other.last_seen;
  } else {
    first_seen = std::min(first_seen, other.first_seen);
    last_seen = std::max(last_seen, other.last_seen);
  }
  tweet_count += other.tweet_count;
  for (std::size_t i = 0; i < kSlots; ++i) slots[i].merge(other.slots[i]);
}

void UserProfile::merge(const UserProfile& other) {
  for (const auto& [id, visit] : other.visits) {
    auto [it, inserted] = visits.try_emplace(id);
    if (inserted) it->second.region = id;
    it->second.merge(visit);
  }
  total_assigned += other.total_assigned;
}

std::vector<const RegionVisit*> ranked_visits(const UserProfile& p) {
  std::vector<const RegionVisit*> out;
  out.reserve(p.visits.size());
  for (const auto& [id, v] : p.visits) out.push_back(&v);
  std::sort(out.begin(), out.end(), [](const RegionVisit* a, const RegionVisit* b) {
    if (a->tweet_count != b->tweet_count) return a->tweet_count > b->tweet_count;
    if (a->first_seen != b->first_seen) return a->first_seen < b->first_seen;
    return a->region < b->region;
  });
  return out;
}

bool ProfileBuilder::add(const EventRecord& e) {
  const auto idx = geo::resolve_event_location(e.location, *regions_);
  if (!idx) {
    ++tally_.unresolved;
    return false;
  }
  const std::string& region = (*regions_)[*idx].id;
  UserProfile& prof = profiles_[e.user_id];
  if (prof.user_id.empty()) prof.user_id = e.user_id;
  auto [it, inserted] = prof.visits.try_emplace(region);
  if (inserted) it->second.region = region;
  it->second.add(e.ts);
  ++prof.total_assigned;
  ++tally_.assigned;
  return true;
}

void ProfileBuilder::merge(const ProfileBuilder& other) {
  for (const auto& [user, prof] : other.profiles_) {
    UserProfile& mine = profiles_[user];
    if (mine.user_id.empty()) mine.user_id = user;
    mine.merge(prof);
  }
  tally_.assigned += other.tally_.assigned;
  tally_.unresolved += other.tally_.unresolved;
}

BuildResult build_profiles(std::span<const EventRecord> events, const geo::RegionSet& rs) {
  ProfileBuilder builder(rs);
  for (const auto& e : events) builder.add(e);
  return {builder.take_profiles(), builder.tally()};
}

bool passes_filter(const UserProfile& p, const FilterOptions& opt) {
  if (p.total_assigned < opt.min_tweets) return false;
  const auto ranked = ranked_visits(p);
  if (ranked.empty()) return false;
  const UnixSeconds min_span = opt.min_span_days * kSecondsPerDay;
  const std::size_t candidates = std::min<std::size_t>(2, ranked.size());
  for (std::size_t k = 0; k < candidates; ++k) {
    if (ranked[k]->last_seen - ranked[k]->first_seen < min_span) return false;
  }
  return true;
}

ProfileMap filter_users(const ProfileMap& profiles, const FilterOptions& opt) {
  if (opt.min_tweets < 1) throw std::invalid_argument("filter_users: min_tweets must be >= 1");
  if (opt.min_span_days < 0) throw std::invalid_argument("filter_users: min_span_days must be >= 0");
  ProfileMap out;
  for (const auto& [id, p] : profiles) {
    if (passes_filter(p, opt)) out.emplace(id, p);
  }
  return out;
}

}  // namespace commuteflow::ingest
