#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "commuteflow/civil_time.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/ingest.hpp"
#include "commuteflow/matrix.hpp"

namespace commuteflow::cluster {

inline constexpr std::size_t kHours = 24;

struct HourlyDistribution {
  std::string region_id;
  DayClass day_class = DayClass::weekday;
  std::array<double, kHours> mass{};
  std::array<std::uint64_t, kHours> counts{};
};

struct HourlyDistributions {
  std::vector<std::size_t> regions;  // positions in the region set, ascending
  std::vector<HourlyDistribution> weekday;
  std::vector<HourlyDistribution> weekend;
  std::vector<std::string> excluded;  // regions without tweets in both day classes
  std::array<double, kHours> mean_weekday{};
  std::array<double, kHours> mean_weekend{};
};

/// Normalized local-hour tweet distributions per region and day class,
/// aggregated over every profile.
HourlyDistributions hourly_distributions(const ingest::ProfileMap& profiles, const geo::RegionSet& rs);

/// Earth mover's distance between two histograms on a linear axis with unit
/// bin spacing: Σ |CDF_a - CDF_b|. Throws std::invalid_argument unless both
/// inputs are non-negative, equally long and sum to 1 (±1e-9).
double emd_1d(std::span<const double> a, std::span<const double> b);

SquareMatrix emd_matrix(std::span<const HourlyDistribution> items);

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> medoids;  // item positions, ordered by item id
  std::vector<int> labels;           // per item: index into medoids
  double cost = 0.0;                 // Σ distance to own medoid
  std::vector<double> cost_history;  // after initialization and each iteration
};

/// PAM-style k-medoids over a precomputed dissimilarity matrix. Greedy
/// initialization (most central item, then farthest-point), then alternating
/// assignment / medoid update with a swap search once that stalls. Ties are
/// broken by item id, so the result does not depend on input order.
/// Throws std::invalid_argument when k is 0 or exceeds the item count.
Clustering k_medoids(const SquareMatrix& distances, std::span<const std::string> ids, std::size_t k,
                     std::size_t max_iter = 100);

}  // namespace commuteflow::cluster
