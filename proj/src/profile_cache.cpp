#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "commuteflow/ingest.hpp"
#include "json.hpp"

namespace commuteflow::ingest {

using json = nlohmann::json;

namespace {
constexpr const char* kFormat = "commuteflow-profiles";
constexpr int kVersion = 1;
}  // namespace

void write_profile_cache(std::ostream& out, const ProfileMap& profiles, const std::vector<std::string>& region_ids) {
  out << json{{"format", kFormat}, {"version", kVersion}, {"regions", region_ids}}.dump() << '\n';
  for (const auto& [id, p] : profiles) {
    json visits = json::array();
    for (const auto& [rid, v] : p.visits) {
      json slots = json::array();
      for (std::size_t s = 0; s < kSlots; ++s) {
        const auto& st = v.slots[s];
        if (st.count > 0) slots.push_back({s, st.count, st.first, st.last});
      }
      visits.push_back({{"region", rid},
                        {"count", v.tweet_count},
                        {"first", v.first_seen},
                        {"last", v.last_seen},
                        {"slots", std::move(slots)}});
    }
    out << json{{"user_id", id}, {"total", p.total_assigned}, {"visits", std::move(visits)}}.dump() << '\n';
  }
}

ProfileCache read_profile_cache(std::istream& in) {
  ProfileCache cache;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("profile cache: missing header");
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != kFormat) {
    throw std::runtime_error("profile cache: bad header");
  }
  if (header.value("version", 0) != kVersion) throw std::runtime_error("profile cache: unsupported version");
  cache.region_ids = header.at("regions").get<std::vector<std::string>>();

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json obj = json::parse(line);
      UserProfile p;
      p.user_id = obj.at("user_id").get<std::string>();
      p.total_assigned = obj.at("total").get<std::uint64_t>();
      std::uint64_t sum = 0;
      for (const auto& jv : obj.at("visits")) {
        RegionVisit v;
        v.region = jv.at("region").get<std::string>();
        v.tweet_count = jv.at("count").get<std::uint64_t>();
        v.first_seen = jv.at("first").get<UnixSeconds>();
        v.last_seen = jv.at("last").get<UnixSeconds>();
        std::uint64_t slot_sum = 0;
        for (const auto& js : jv.at("slots")) {
          const auto s = js.at(0).get<std::size_t>();
          if (s >= kSlots) throw std::runtime_error("slot index out of range");
          v.slots[s] = {js.at(1).get<std::uint64_t>(), js.at(2).get<UnixSeconds>(), js.at(3).get<UnixSeconds>()};
          slot_sum += v.slots[s].count;
        }
        if (slot_sum != v.tweet_count || v.first_seen > v.last_seen) {
          throw std::runtime_error("inconsistent visit for region " + v.region);
        }
        sum += v.tweet_count;
        p.visits.emplace(v.region, std::move(v));
      }
      if (sum != p.total_assigned) throw std::runtime_error("total does not match visits");
      cache.profiles.emplace(p.user_id, std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("profile cache line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cache;
}

ProfileCache read_profile_cache_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open profile cache " + path);
  return read_profile_cache(in);
}

}  // namespace commuteflow::ingest
