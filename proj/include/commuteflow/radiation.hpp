#pragma once

#include <span>
#include <string>
#include <vector>

#include "commuteflow/flow.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/matrix.hpp"

namespace commuteflow::radiation {

/// s(i,j): total population of regions k (k != i, j) strictly closer to i
/// than j is. Generally asymmetric.
SquareMatrix intervening_population(std::span<const double> populations, const SquareMatrix& distances);

struct RadiationInputs {
  std::vector<std::string> region_ids;
  std::vector<double> n;
  SquareMatrix distances;  // km, symmetric, zero diagonal
  SquareMatrix s;
  flow::CommuterMarginals marginals;

  /// Centroid-to-centroid great-circle distances; s derived from them.
  static RadiationInputs from_regions(const geo::RegionSet& rs, flow::CommuterMarginals marginals);
  static RadiationInputs from_parts(std::vector<std::string> ids, std::vector<double> n, SquareMatrix distances,
                                    flow::CommuterMarginals marginals);
};

/// n_i n_j / ((n_i + s_ij)(n_i + n_j + s_ij))
double standard_score(double n_i, double n_j, double s_ij);

/// [(a + n_j)^α - a^α](n_i^α + 1) / ((a^α + 1)[(a + n_j)^α + 1]) with a = n_i + s_ij.
double one_param_score(double n_i, double n_j, double s_ij, double alpha);

struct RadiationResult {
  flow::FlowMatrix flows;
  std::vector<std::size_t> zero_rows;
};

/// Raw scores off the diagonal, rows rescaled to the marginals' c_i.
/// Throws std::invalid_argument naming the first region with zero population.
RadiationResult radiation_standard(const RadiationInputs& in);

/// `alpha` holds one value for every origin row, or a single global value.
RadiationResult radiation_one_param(const RadiationInputs& in, std::span<const double> alpha);
RadiationResult radiation_one_param(const RadiationInputs& in, double alpha);

inline constexpr double kAlphaScaleKm = 36.0;
inline constexpr double kAlphaExponent = 1.33;
inline constexpr double kMinScaleKm = 1.0;
inline constexpr double kMaxScaleKm = 65.0;

struct AlphaEstimate {
  double alpha = 1.0;
  double l_km = kAlphaScaleKm;  // after clamping
  bool clamped = false;
};

/// α = (l / 36 km)^1.33 with l clamped into [1, 65] km.
AlphaEstimate alpha_from_scale(double l_km);
/// l = sqrt(area). Throws std::invalid_argument for non-positive area.
AlphaEstimate alpha_estimate(double area_km2);

}  // namespace commuteflow::radiation
