#pragma once

// Fixtures and independent reference implementations used by the test
// binaries. The oracles here are deliberately naive so they share no code
// path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "commuteflow/geo.hpp"
#include "commuteflow/matrix.hpp"

namespace testsupport {

using commuteflow::SquareMatrix;
using commuteflow::geo::GeoPoint;
using commuteflow::geo::Region;
using commuteflow::geo::Ring;

inline Ring box_ring(double west, double south, double east, double north) {
  return {{west, south}, {east, south}, {east, north}, {west, north}, {west, south}};
}

inline Region square(const std::string& id, double west, double south, double size, std::int64_t population = 1000) {
  Region r;
  r.id = id;
  r.name = id;
  r.rings = {box_ring(west, south, west + size, south + size)};
  r.population = population;
  r.centroid = {west + size / 2, south + size / 2};
  return r;
}

// Row of unit squares along the equator: ids R0, R1, ...
inline commuteflow::geo::RegionSet strip(std::size_t n, double size = 0.1) {
  std::vector<Region> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(square("R" + std::to_string(i), size * static_cast<double>(i), 0.0, size));
  return commuteflow::geo::RegionSet(std::move(v));
}

// Crossing count of a ray towards +lon; vertices are checked directly for
// the half-open rule by treating an edge as crossing when exactly one of its
// endpoints lies strictly above p.lat.
inline int brute_crossings(const Ring& ring, const GeoPoint& p) {
  int c = 0;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    const GeoPoint a = ring[k];
    const GeoPoint b = ring[k + 1];
    if ((a.lat > p.lat) == (b.lat > p.lat)) continue;
    const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
    if (x > p.lon) ++c;
  }
  return c;
}

// Spherical law of cosines, a formula independent of haversine.
inline double cosine_law_km(const GeoPoint& a, const GeoPoint& b) {
  const double r = std::numbers::pi / 180.0;
  const double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
                   std::cos(a.lat * r) * std::cos(b.lat * r) * std::cos((b.lon - a.lon) * r);
  return commuteflow::geo::kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

// s_ij by triple loop.
inline SquareMatrix brute_intervening(const std::vector<double>& n, const SquareMatrix& d) {
  const std::size_t k = n.size();
  SquareMatrix s(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double v = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        if (q != i && q != j && d(i, q) < d(i, j)) v += n[q];
      }
      s(i, j) = v;
    }
  }
  return s;
}

// Optimal transport between two histograms on an integer axis by greedy
// matching of unit masses from left to right (optimal for |i - j| cost).
inline double transport_emd(std::vector<double> a, std::vector<double> b) {
  double cost = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= 1e-15) {
      ++i;
      continue;
    }
    if (b[j] <= 1e-15) {
      ++j;
      continue;
    }
    const double m = std::min(a[i], b[j]);
    cost += m * std::abs(static_cast<double>(i) - static_cast<double>(j));
    a[i] -= m;
    b[j] -= m;
  }
  return cost;
}

// Minimal total distance-to-nearest-medoid over every k-subset.
inline double exhaustive_medoid_cost(const SquareMatrix& d, std::size_t k) {
  const std::size_t n = d.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        if (pick[j]) m = std::min(m, d(i, j));
      }
      c += m;
    }
    best = std::min(best, c);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Sørensen form computed in long double with a plain loop.
inline double naive_cpc(const SquareMatrix& a, const SquareMatrix& b) {
  long double common = 0;
  long double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      common += std::min(a(i, j), b(i, j));
      total += a(i, j) + b(i, j);
    }
  }
  return static_cast<double>(2 * common / total);
}

}  // namespace testsupport
