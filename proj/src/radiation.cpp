#include "commuteflow/radiation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace commuteflow::radiation {

SquareMatrix intervening_population(std::span<const double> populations, const SquareMatrix& distances) {
  const std::size_t k = populations.size();
  if (distances.size() != k) throw std::invalid_argument("intervening_population: dimension mismatch");
  SquareMatrix s(k);
  std::vector<std::size_t> order(k);
  std::vector<double> prefix(k + 1);
  for (std::size_t i = 0; i < k; ++i) {
    // Neighbours of i by distance; i itself is excluded from every circle.
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distances(i, a) < distances(i, b); });
    prefix[0] = 0.0;
    for (std::size_t r = 0; r < k; ++r) prefix[r + 1] = prefix[r] + (order[r] == i ? 0.0 : populations[order[r]]);

    // Walk the sorted list in groups of equal distance: everything before the
    // group is strictly inside the circle through any member of the group.
    std::size_t r = 0;
    while (r < k) {
      std::size_t end = r;
      while (end < k && distances(i, order[end]) == distances(i, order[r])) ++end;
      for (std::size_t q = r; q < end; ++q) {
        const std::size_t j = order[q];
        if (j != i) s(i, j) = prefix[r];
      }
      r = end;
    }
  }
  return s;
}

RadiationInputs RadiationInputs::from_parts(std::vector<std::string> ids, std::vector<double> n,
                                            SquareMatrix distances, flow::CommuterMarginals marginals) {
  if (ids.size() != n.size() || distances.size() != n.size() || marginals.c.size() != n.size()) {
    throw std::invalid_argument("radiation inputs: dimension mismatch");
  }
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (distances(i, i) != 0.0) throw std::invalid_argument("radiation inputs: nonzero self distance");
    for (std::size_t j = 0; j < i; ++j) {
      if (distances(i, j) != distances(j, i) || distances(i, j) < 0.0) {
        throw std::invalid_argument("radiation inputs: distance matrix must be symmetric and non-negative");
      }
    }
  }
  RadiationInputs in;
  in.s = intervening_population(n, distances);
  in.region_ids = std::move(ids);
  in.n = std::move(n);
  in.distances = std::move(distances);
  in.marginals = std::move(marginals);
  return in;
}

RadiationInputs RadiationInputs::from_regions(const geo::RegionSet& rs, flow::CommuterMarginals marginals) {
  const std::size_t k = rs.size();
  SquareMatrix d(k);
  const auto flat = geo::centroid_distances(rs);
  std::copy(flat.begin(), flat.end(), d.values().begin());
  return from_parts(rs.ids(), flow::populations(rs), std::move(d), std::move(marginals));
}

double standard_score(double n_i, double n_j, double s_ij) {
  return n_i * n_j / ((n_i + s_ij) * (n_i + n_j + s_ij));
}

double one_param_score(double n_i, double n_j, double s_ij, double alpha) {
  const double a = n_i + s_ij;
  const double a_alpha = std::pow(a, alpha);
  const double an_alpha = std::pow(a + n_j, alpha);
  return (an_alpha - a_alpha) * (std::pow(n_i, alpha) + 1.0) / ((a_alpha + 1.0) * (an_alpha + 1.0));
}

namespace {

void require_positive_populations(const RadiationInputs& in) {
  for (std::size_t i = 0; i < in.n.size(); ++i) {
    if (!(in.n[i] > 0.0)) throw std::invalid_argument("region " + in.region_ids[i] + " has zero population");
  }
}

template <typename Score>
RadiationResult build(const RadiationInputs& in, flow::Provenance prov, Score score) {
  require_positive_populations(in);
  const std::size_t k = in.n.size();
  flow::FlowMatrix raw(in.region_ids, prov, false);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) raw.values(i, j) = score(i, j);
    }
  }
  auto norm = flow::normalize_rows(raw, in.marginals, flow::Commuting::external);
  norm.flows.provenance = prov;
  return {std::move(norm.flows), std::move(norm.zero_rows)};
}

}  // namespace

RadiationResult radiation_standard(const RadiationInputs& in) {
  return build(in, flow::Provenance::radiation_std,
               [&](std::size_t i, std::size_t j) { return standard_score(in.n[i], in.n[j], in.s(i, j)); });
}

RadiationResult radiation_one_param(const RadiationInputs& in, std::span<const double> alpha) {
  if (alpha.size() != 1 && alpha.size() != in.n.size()) {
    throw std::invalid_argument("radiation_one_param: need one alpha or one per region");
  }
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("radiation_one_param: alpha must be positive");
  }
  return build(in, flow::Provenance::radiation_1p, [&](std::size_t i, std::size_t j) {
    const double a = alpha.size() == 1 ? alpha[0] : alpha[i];
    return one_param_score(in.n[i], in.n[j], in.s(i, j), a);
  });
}

RadiationResult radiation_one_param(const RadiationInputs& in, double alpha) {
  const double one[] = {alpha};
  return radiation_one_param(in, std::span<const double>(one));
}

AlphaEstimate alpha_from_scale(double l_km) {
  if (!(l_km > 0.0) || !std::isfinite(l_km)) throw std::invalid_argument("area scale must be positive");
  AlphaEstimate est;
  est.l_km = std::clamp(l_km, kMinScaleKm, kMaxScaleKm);
  est.clamped = est.l_km != l_km;
  est.alpha = std::pow(est.l_km / kAlphaScaleKm, kAlphaExponent);
  return est;
}

AlphaEstimate alpha_estimate(double area_km2) {
  if (!(area_km2 > 0.0)) throw std::invalid_argument("alpha_estimate: area must be positive");
  return alpha_from_scale(std::sqrt(area_km2));
}

}  // namespace commuteflow::radiation
