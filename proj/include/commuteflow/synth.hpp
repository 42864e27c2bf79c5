#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "commuteflow/civil_time.hpp"
#include "commuteflow/flow.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/ingest.hpp"
#include "commuteflow/random.hpp"

namespace commuteflow::synth {

enum class Days { all, weekdays, weekends };

struct GridSpec {
  std::size_t rows = 7;
  std::size_t cols = 7;
  double cell_km = 10.0;
  geo::GeoPoint origin{-2.0, 52.0};  // south-west corner
  std::int64_t population_min = 20000;
  std::int64_t population_max = 200000;
  std::vector<std::int64_t> populations;  // overrides the range when non-empty
};

struct CommuterSpec {
  std::size_t users = 5000;
  double internal_fraction = 0.3;
  double decay_km = 12.0;  // exponential distance-decay length of work choice
};

struct TweetSpec {
  std::int64_t min_per_user = 12;
  std::int64_t max_per_user = 30;
  double home_share = 0.6;
  double work_share = 0.4;
  std::array<double, 24> home_profile{};  // relative weight per local hour
  std::array<double, 24> work_profile{};
  Days home_days = Days::all;
  Days work_days = Days::weekdays;
  UnixSeconds start = 1433116800;  // 2015-06-01T00:00:00Z
  std::int64_t span_days = 365;
  bool filter_compatible = true;

  TweetSpec();
};

struct NoiseSpec {
  double tweet_share = 0.0;    // tweets from uniformly random regions and hours
  double no_work_share = 0.0;  // users who only tweet from home (plus noise)
};

struct SynthConfig {
  std::uint64_t seed = 0;
  GridSpec grid;
  CommuterSpec commuters;
  TweetSpec tweets;
  NoiseSpec noise;

  /// Throws std::invalid_argument on incoherent shares, ranges or a degenerate grid.
  void validate() const;
};

/// Reads a config document; `seed` is mandatory, everything else defaults.
SynthConfig parse_config(std::string_view json_text);
SynthConfig load_config(const std::string& path);

struct SynthUser {
  std::string id;
  std::size_t home = 0;
  std::optional<std::size_t> work;  // absent for users without a workplace
};

struct World {
  geo::RegionSet regions;
  flow::FlowMatrix truth;
  flow::CommuterMarginals marginals;
  std::vector<SynthUser> users;

  /// Truth, marginals from a user list on an existing region set.
  static World from_users(geo::RegionSet regions, std::vector<SynthUser> users);
};

/// Square cells on a lon/lat grid with seeded populations; every user gets a
/// population-weighted home and, unless internal, a work region chosen with
/// weight n_j exp(-d_ij / decay_km).
///
/// Draw order per user: no-work flag, home, internal flag, destination.
World generate_world(const SynthConfig& config, Rng& rng);
World generate_world(const SynthConfig& config);

/// Per user in order: tweet count, then per tweet (home block, work block,
/// noise block) region for noise, day, hour, second-of-hour, and position
/// inside the region.
void generate_events(const World& world, const SynthConfig& config, Rng& rng,
                     const std::function<void(const ingest::EventRecord&)>& sink);
/// Seeds a generator from config.seed (offset from the world stream).
std::size_t generate_events(const World& world, const SynthConfig& config, std::ostream& out);

/// One generator drives the world and then the events.
struct Synthesis {
  World world;
  std::vector<ingest::EventRecord> events;
};
Synthesis synthesize(const SynthConfig& config);

}  // namespace commuteflow::synth
