#include "commuteflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace commuteflow::synth {

using json = nlohmann::json;

TweetSpec::TweetSpec() {
  for (int h = 20; h < 23; ++h) home_profile[static_cast<std::size_t>(h)] = 1.0;
  for (int h = 10; h < 15; ++h) work_profile[static_cast<std::size_t>(h)] = 1.0;
}

namespace {

bool is_share(double v) { return v >= 0.0 && v <= 1.0; }

Days parse_days(const std::string& s) {
  if (s == "all") return Days::all;
  if (s == "weekdays") return Days::weekdays;
  if (s == "weekends") return Days::weekends;
  throw std::invalid_argument("synth config: unknown day set '" + s + "'");
}

std::array<double, 24> parse_profile(const json& j, const char* name) {
  std::array<double, 24> p{};
  if (j.is_array() && j.size() == 24) {
    for (std::size_t h = 0; h < 24; ++h) p[h] = j[h].get<double>();
    return p;
  }
  // A short list is read as the set of active hours.
  if (j.is_array()) {
    for (const auto& h : j) {
      const int hour = h.get<int>();
      if (hour < 0 || hour > 23) throw std::invalid_argument(std::string("synth config: bad hour in ") + name);
      p[static_cast<std::size_t>(hour)] = 1.0;
    }
    return p;
  }
  throw std::invalid_argument(std::string("synth config: ") + name + " must be an array");
}

}  // namespace

void SynthConfig::validate() const {
  if (grid.rows == 0 || grid.cols == 0 || grid.rows * grid.cols < 2) {
    throw std::invalid_argument("synth config: degenerate grid (need at least two cells)");
  }
  if (!(grid.cell_km > 0.0)) throw std::invalid_argument("synth config: cell_km must be positive");
  if (!geo::is_valid(grid.origin)) throw std::invalid_argument("synth config: origin out of range");
  if (grid.populations.empty()) {
    if (grid.population_min < 0 || grid.population_max < grid.population_min) {
      throw std::invalid_argument("synth config: bad population range");
    }
  } else {
    if (grid.populations.size() != grid.rows * grid.cols) {
      throw std::invalid_argument("synth config: populations must list one value per cell");
    }
    for (auto p : grid.populations) {
      if (p < 0) throw std::invalid_argument("synth config: negative population");
    }
  }
  if (!is_share(commuters.internal_fraction)) throw std::invalid_argument("synth config: internal_fraction not in [0,1]");
  if (!(commuters.decay_km > 0.0)) throw std::invalid_argument("synth config: decay_km must be positive");
  if (!is_share(tweets.home_share) || !is_share(tweets.work_share) || !is_share(noise.tweet_share) ||
      !is_share(noise.no_work_share)) {
    throw std::invalid_argument("synth config: shares must lie in [0,1]");
  }
  if (std::abs(tweets.home_share + tweets.work_share + noise.tweet_share - 1.0) > 1e-9) {
    throw std::invalid_argument("synth config: home, work and noise shares must sum to 1");
  }
  if (tweets.min_per_user < 1 || tweets.max_per_user < tweets.min_per_user) {
    throw std::invalid_argument("synth config: bad tweets-per-user range");
  }
  if (tweets.span_days < 1) throw std::invalid_argument("synth config: span_days must be positive");
  for (const auto* profile : {&tweets.home_profile, &tweets.work_profile}) {
    double s = 0.0;
    for (double w : *profile) {
      if (!(w >= 0.0)) throw std::invalid_argument("synth config: negative hour weight");
      s += w;
    }
    if (!(s > 0.0)) throw std::invalid_argument("synth config: hour profile has no weight");
  }
  if (tweets.filter_compatible) {
    if (tweets.min_per_user < 5) throw std::invalid_argument("synth config: filter-compatible output needs >= 5 tweets per user");
    if (tweets.span_days < 38) throw std::invalid_argument("synth config: filter-compatible output needs span_days >= 38");
  }
}

SynthConfig parse_config(std::string_view text) {
  const json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw std::invalid_argument("synth config: not a JSON object");
  if (!doc.contains("seed") || !doc["seed"].is_number_integer()) throw std::invalid_argument("synth config: seed is mandatory");

  SynthConfig c;
  try {
    c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("grid")) {
      const auto& g = doc["grid"];
      c.grid.rows = g.value("rows", c.grid.rows);
      c.grid.cols = g.value("cols", c.grid.cols);
      c.grid.cell_km = g.value("cell_km", c.grid.cell_km);
      if (g.contains("origin")) c.grid.origin = {g["origin"].at(0).get<double>(), g["origin"].at(1).get<double>()};
      c.grid.population_min = g.value("population_min", c.grid.population_min);
      c.grid.population_max = g.value("population_max", c.grid.population_max);
      if (g.contains("populations")) c.grid.populations = g["populations"].get<std::vector<std::int64_t>>();
    }
    if (doc.contains("commuters")) {
      const auto& m = doc["commuters"];
      c.commuters.users = m.value("users", c.commuters.users);
      c.commuters.internal_fraction = m.value("internal_fraction", c.commuters.internal_fraction);
      c.commuters.decay_km = m.value("decay_km", c.commuters.decay_km);
    }
    if (doc.contains("tweets")) {
      const auto& t = doc["tweets"];
      c.tweets.min_per_user = t.value("min_per_user", c.tweets.min_per_user);
      c.tweets.max_per_user = t.value("max_per_user", c.tweets.max_per_user);
      c.tweets.home_share = t.value("home_share", c.tweets.home_share);
      c.tweets.work_share = t.value("work_share", c.tweets.work_share);
      if (t.contains("home_profile")) c.tweets.home_profile = parse_profile(t["home_profile"], "home_profile");
      if (t.contains("work_profile")) c.tweets.work_profile = parse_profile(t["work_profile"], "work_profile");
      if (t.contains("home_days")) c.tweets.home_days = parse_days(t["home_days"].get<std::string>());
      if (t.contains("work_days")) c.tweets.work_days = parse_days(t["work_days"].get<std::string>());
      if (t.contains("start")) {
        const auto s = parse_iso8601_utc(t["start"].get<std::string>());
        if (!s) throw std::invalid_argument("synth config: start is not ISO-8601 UTC");
        c.tweets.start = *s;
      }
      c.tweets.span_days = t.value("span_days", c.tweets.span_days);
      c.tweets.filter_compatible = t.value("filter_compatible", c.tweets.filter_compatible);
    }
    if (doc.contains("noise")) {
      const auto& n = doc["noise"];
      c.noise.tweet_share = n.value("tweet_share", c.noise.tweet_share);
      c.noise.no_work_share = n.value("no_work_share", c.noise.no_work_share);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

World World::from_users(geo::RegionSet regions, std::vector<SynthUser> users) {
  World w;
  w.truth = flow::FlowMatrix(regions.ids(), flow::Provenance::synthetic_truth, true);
  for (const auto& u : users) {
    if (u.home >= regions.size() || (u.work && *u.work >= regions.size())) {
      throw std::invalid_argument("synthetic user " + u.id + " refers to a region outside the set");
    }
    if (u.work) w.truth.values(u.home, *u.work) += 1.0;
  }
  w.marginals = flow::CommuterMarginals::from_flows(w.truth, flow::Commuting::all, flow::populations(regions));
  w.regions = std::move(regions);
  w.users = std::move(users);
  return w;
}

namespace {

geo::RegionSet make_grid(const SynthConfig& config, Rng& rng) {
  const auto& g = config.grid;
  const double km_per_deg = geo::kEarthRadiusKm * std::numbers::pi / 180.0;
  const double dlat = g.cell_km / km_per_deg;
  const double mid_lat = g.origin.lat + dlat * static_cast<double>(g.rows) / 2.0;
  const double dlon = g.cell_km / (km_per_deg * std::cos(mid_lat * std::numbers::pi / 180.0));

  std::vector<geo::Region> regions;
  regions.reserve(g.rows * g.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const std::size_t idx = r * g.cols + c;
      const double west = g.origin.lon + dlon * static_cast<double>(c);
      const double east = g.origin.lon + dlon * static_cast<double>(c + 1);
      const double south = g.origin.lat + dlat * static_cast<double>(r);
      const double north = g.origin.lat + dlat * static_cast<double>(r + 1);
      char id[32];
      std::snprintf(id, sizeof id, "C%03zu", idx);
      geo::Region reg;
      reg.id = id;
      reg.name = "cell " + std::to_string(r) + "," + std::to_string(c);
      reg.rings = {{{west, south}, {east, south}, {east, north}, {west, north}, {west, south}}};
      reg.centroid = {(west + east) / 2.0, (south + north) / 2.0};
      reg.population = g.populations.empty() ? rng.between(g.population_min, g.population_max) : g.populations[idx];
      regions.push_back(std::move(reg));
    }
  }
  return geo::RegionSet(std::move(regions));
}

}  // namespace

World generate_world(const SynthConfig& config, Rng& rng) {
  config.validate();
  geo::RegionSet regions = make_grid(config, rng);
  const std::size_t k = regions.size();
  const auto n = flow::populations(regions);
  const auto dist = geo::centroid_distances(regions);

  std::vector<double> home_weights = n;
  if (std::all_of(home_weights.begin(), home_weights.end(), [](double v) { return v <= 0.0; })) {
    std::fill(home_weights.begin(), home_weights.end(), 1.0);
  }
  std::vector<std::vector<double>> work_weights(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) work_weights[i][j] = n[j] * std::exp(-dist[i * k + j] / config.commuters.decay_km);
    }
    double s = 0.0;
    for (double w : work_weights[i]) s += w;
    if (!(s > 0.0)) {
      for (std::size_t j = 0; j < k; ++j) work_weights[i][j] = j == i ? 0.0 : 1.0;
    }
  }

  std::vector<SynthUser> users;
  users.reserve(config.commuters.users);
  const int width = std::max<int>(1, static_cast<int>(std::to_string(config.commuters.users).size()));
  for (std::size_t u = 0; u < config.commuters.users; ++u) {
    SynthUser user;
    char id[32];
    std::snprintf(id, sizeof id, "u%0*zu", width, u);
    user.id = id;
    const bool no_work = rng.uniform01() < config.noise.no_work_share;
    user.home = rng.weighted(home_weights);
    const bool internal = rng.uniform01() < config.commuters.internal_fraction;
    const std::size_t work = internal ? user.home : rng.weighted(work_weights[user.home]);
    if (!no_work) user.work = work;
    users.push_back(std::move(user));
  }
  return World::from_users(std::move(regions), std::move(users));
}

World generate_world(const SynthConfig& config) {
  Rng rng(config.seed);
  return generate_world(config, rng);
}

namespace {

bool day_matches(Days d, DayClass c) {
  switch (d) {
    case Days::all: return true;
    case Days::weekdays: return c == DayClass::weekday;
    case Days::weekends: return c == DayClass::weekend;
  }
  return true;
}

class EventFactory {
 public:
  EventFactory(const World& world, const SynthConfig& config, Rng& rng)
      : world_(world), config_(config), rng_(rng) {
    // Local midnight of the first day, expressed as wall-clock seconds.
    day0_ = config.tweets.start - ((config.tweets.start % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
    for (std::int64_t d = 0; d < config.tweets.span_days; ++d) {
      const int wd = weekday_index(day0_ + d * kSecondsPerDay);
      const DayClass c = wd >= 5 ? DayClass::weekend : DayClass::weekday;
      for (Days set : {Days::all, Days::weekdays, Days::weekends}) {
        if (day_matches(set, c)) days_[static_cast<int>(set)].push_back(d);
      }
    }
    for (const auto* set : {&config.tweets.home_days, &config.tweets.work_days}) {
      if (days_[static_cast<int>(*set)].size() < 2) {
        throw std::invalid_argument("synth: observation span has too few eligible days");
      }
    }
  }

  void emit_user(const SynthUser& user, const std::function<void(const ingest::EventRecord&)>& sink) {
    const auto& t = config_.tweets;
    const std::int64_t total = rng_.between(t.min_per_user, t.max_per_user);
    const auto noise = static_cast<std::int64_t>(std::llround(config_.noise.tweet_share * static_cast<double>(total)));
    std::int64_t work = user.work ? static_cast<std::int64_t>(std::llround(t.work_share * static_cast<double>(total))) : 0;
    std::int64_t home = total - noise - work;
    if (t.filter_compatible && user.work) {
      // Home strictly dominates work and both blocks can span the window.
      work = std::max<std::int64_t>(work, 2);
      home = total - noise - work;
      if (home <= work) {
        work = std::max<std::int64_t>(2, (total - noise - 1) / 2);
        home = total - noise - work;
      }
      if (home <= work || work < 2) throw std::invalid_argument("synth: too few tweets per user for filter compatibility");
    }
    if (home < 0) throw std::invalid_argument("synth: tweet shares leave no room for home tweets");

    std::vector<ingest::EventRecord> events;
    events.reserve(static_cast<std::size_t>(total));
    block(user, user.home, home, t.home_profile, t.home_days, events);
    if (user.work) block(user, *user.work, work, t.work_profile, t.work_days, events);
    for (std::int64_t k = 0; k < noise; ++k) {
      const auto region = static_cast<std::size_t>(rng_.below(world_.regions.size()));
      const auto& all = days_[static_cast<int>(Days::all)];
      const std::int64_t day = all[static_cast<std::size_t>(rng_.below(all.size()))];
      const auto hour = static_cast<int>(rng_.below(24));
      events.push_back(make_event(user, region, day, hour));
    }
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
    for (const auto& e : events) sink(e);
  }

 private:
  void block(const SynthUser& user, std::size_t region, std::int64_t count, const std::array<double, 24>& profile,
             Days days, std::vector<ingest::EventRecord>& out) {
    const auto& eligible = days_[static_cast<int>(days)];
    const bool pin = config_.tweets.filter_compatible && count >= 2;
    for (std::int64_t k = 0; k < count; ++k) {
      std::int64_t day;
      if (pin && k == 0) {
        day = eligible.front();
      } else if (pin && k == 1) {
        day = eligible.back();
      } else {
        day = eligible[static_cast<std::size_t>(rng_.below(eligible.size()))];
      }
      const auto hour = static_cast<int>(rng_.weighted(profile));
      out.push_back(make_event(user, region, day, hour));
    }
  }

  ingest::EventRecord make_event(const SynthUser& user, std::size_t region, std::int64_t day, int hour) {
    const auto second = static_cast<std::int64_t>(rng_.below(3600));
    const UnixSeconds local = day0_ + day * kSecondsPerDay + hour * 3600 + second;
    return {user.id, uk_local_to_utc(local), point_in(region)};
  }

  geo::GeoPoint point_in(std::size_t region) {
    const auto& r = world_.regions[region];
    const auto box = r.bounds();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const geo::GeoPoint p{rng_.uniform(box.west, box.east), rng_.uniform(box.south, box.north)};
      if (world_.regions.locate(p) == region) return p;
    }
    throw std::runtime_error("synth: cannot sample a point inside region " + r.id);
  }

  const World& world_;
  const SynthConfig& config_;
  Rng& rng_;
  UnixSeconds day0_ = 0;
  std::array<std::vector<std::int64_t>, 3> days_;
};

constexpr std::uint64_t kEventStreamOffset = 0x9E3779B97F4A7C15ULL;

}  // namespace

void generate_events(const World& world, const SynthConfig& config, Rng& rng,
                     const std::function<void(const ingest::EventRecord&)>& sink) {
  config.validate();
  EventFactory factory(world, config, rng);
  for (const auto& u : world.users) factory.emit_user(u, sink);
}

std::size_t generate_events(const World& world, const SynthConfig& config, std::ostream& out) {
  Rng rng(config.seed ^ kEventStreamOffset);
  std::size_t n = 0;
  generate_events(world, config, rng, [&](const ingest::EventRecord& e) {
    out << ingest::to_json_line(e) << '\n';
    ++n;
  });
  return n;
}

Synthesis synthesize(const SynthConfig& config) {
  Rng rng(config.seed);
  Synthesis s{generate_world(config, rng), {}};
  generate_events(s.world, config, rng, [&](const ingest::EventRecord& e) { s.events.push_back(e); });
  return s;
}

}  // namespace commuteflow::synth
