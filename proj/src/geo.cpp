#include "commuteflow/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace commuteflow::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Number of ray crossings of one ring. Each edge is evaluated with its
// endpoints ordered by latitude so that two polygons sharing the edge compute
// the identical intersection longitude.
int ring_crossings(const Ring& ring, const GeoPoint& p) {
  int crossings = 0;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    GeoPoint a = ring[k];
    GeoPoint b = ring[k + 1];
    if ((a.lat > p.lat) == (b.lat > p.lat)) continue;
    if (a.lat > b.lat || (a.lat == b.lat && a.lon > b.lon)) std::swap(a, b);
    const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
    if (p.lon < x) ++crossings;
  }
  return crossings;
}

double signed_ring_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    twice += ring[k].lon * ring[k + 1].lat - ring[k + 1].lon * ring[k].lat;
  }
  return twice / 2.0;
}

}  // namespace

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
         p.lat >= -90.0 && p.lat <= 90.0;
}

std::optional<PlaceType> parse_place_type(std::string_view s) {
  if (s == "city") return PlaceType::city;
  if (s == "admin") return PlaceType::admin;
  if (s == "country") return PlaceType::country;
  if (s == "other") return PlaceType::other;
  return std::nullopt;
}

std::string_view to_string(PlaceType t) {
  switch (t) {
    case PlaceType::city: return "city";
    case PlaceType::admin: return "admin";
    case PlaceType::country: return "country";
    case PlaceType::other: return "other";
  }
  return "other";
}

bool is_valid(const BoundingBox& b) {
  return is_valid(GeoPoint{b.west, b.south}) && is_valid(GeoPoint{b.east, b.north}) &&
         b.west <= b.east && b.south <= b.north;
}

GeoPoint centroid(const BoundingBox& b) {
  return {(b.west + b.east) / 2.0, (b.south + b.north) / 2.0};
}

BoundingBox Region::bounds() const {
  BoundingBox box{180.0, 90.0, -180.0, -90.0, PlaceType::other};
  for (const auto& ring : rings) {
    for (const auto& v : ring) {
      box.west = std::min(box.west, v.lon);
      box.east = std::max(box.east, v.lon);
      box.south = std::min(box.south, v.lat);
      box.north = std::max(box.north, v.lat);
    }
  }
  return box;
}

bool contains(const Region& r, const GeoPoint& p) {
  int crossings = 0;
  for (const auto& ring : r.rings) crossings += ring_crossings(ring, p);
  return crossings % 2 == 1;
}

GeoPoint planar_centroid(const std::vector<Ring>& rings) {
  // Holes are recognised by even-odd nesting: a ring whose first vertex lies
  // inside an odd number of other rings contributes negatively.
  double total = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const Ring& ring = rings[r];
    if (ring.size() < 4) continue;
    const double a = signed_ring_area(ring);
    int depth = 0;
    for (std::size_t o = 0; o < rings.size(); ++o) {
      // Only a larger ring can contain this one; this keeps shared vertices from
      // nesting an outer ring inside its own hole.
      if (o == r || std::abs(signed_ring_area(rings[o])) <= std::abs(a)) continue;
      depth += ring_crossings(rings[o], ring.front()) % 2;
    }
    const double sign = depth % 2 == 0 ? 1.0 : -1.0;
    double rx = 0.0;
    double ry = 0.0;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
      const double cross = ring[k].lon * ring[k + 1].lat - ring[k + 1].lon * ring[k].lat;
      rx += (ring[k].lon + ring[k + 1].lon) * cross;
      ry += (ring[k].lat + ring[k + 1].lat) * cross;
    }
    if (a == 0.0) continue;
    // rx / (6a) is the ring centroid; weight it by the unsigned, nest-signed area.
    const double weight = sign * std::abs(a);
    cx += weight * rx / (6.0 * a);
    cy += weight * ry / (6.0 * a);
    total += weight;
  }
  if (total == 0.0) {
    Region tmp;
    tmp.rings = rings;
    return centroid(tmp.bounds());
  }
  return {cx / total, cy / total};
}

double area_km2(const Region& r) {
  // Spherical-excess approximation per ring, holes subtracted by nesting.
  double total = 0.0;
  for (std::size_t idx = 0; idx < r.rings.size(); ++idx) {
    const Ring& ring = r.rings[idx];
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
      const double l1 = ring[k].lon * kDegToRad;
      const double l2 = ring[k + 1].lon * kDegToRad;
      const double p1 = ring[k].lat * kDegToRad;
      const double p2 = ring[k + 1].lat * kDegToRad;
      sum += (l2 - l1) * (2.0 + std::sin(p1) + std::sin(p2));
    }
    int depth = 0;
    for (std::size_t o = 0; o < r.rings.size(); ++o) {
      if (o != idx && !ring.empty()) depth += ring_crossings(r.rings[o], ring.front()) % 2;
    }
    const double a = std::abs(sum) * kEarthRadiusKm * kEarthRadiusKm / 2.0;
    total += depth % 2 == 0 ? a : -a;
  }
  return std::max(total, 0.0);
}

RegionSet::RegionSet(std::vector<Region> regions) : regions_(std::move(regions)) {
  bounds_.reserve(regions_.size());
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const Region& r = regions_[i];
    if (r.id.empty()) throw std::invalid_argument("region at position " + std::to_string(i) + " has an empty id");
    if (r.rings.empty()) throw std::invalid_argument("region " + r.id + " has no rings");
    for (const auto& ring : r.rings) {
      if (ring.size() < 4 || !(ring.front() == ring.back())) {
        throw std::invalid_argument("region " + r.id + " has a ring that is not closed or has fewer than 4 vertices");
      }
      for (const auto& v : ring) {
        if (!is_valid(v)) throw std::invalid_argument("region " + r.id + " has an out-of-range vertex");
      }
    }
    if (r.population < 0) throw std::invalid_argument("region " + r.id + " has negative population");
    const BoundingBox box = r.bounds();
    if (!box.contains(r.centroid)) {
      throw std::invalid_argument("region " + r.id + " has a centroid outside its bounding box");
    }
    if (!index_.emplace(r.id, i).second) throw std::invalid_argument("duplicate region id " + r.id);
    bounds_.push_back(box);
  }
  build_grid();
}

void RegionSet::build_grid() {
  if (regions_.empty()) return;
  extent_ = bounds_.front();
  for (const auto& b : bounds_) {
    extent_.west = std::min(extent_.west, b.west);
    extent_.east = std::max(extent_.east, b.east);
    extent_.south = std::min(extent_.south, b.south);
    extent_.north = std::max(extent_.north, b.north);
  }
  const auto side = static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(regions_.size()))));
  grid_cols_ = std::clamp<std::size_t>(side, 1, 512);
  grid_rows_ = grid_cols_;
  cells_.assign(grid_cols_ * grid_rows_, {});

  const auto col_of = [&](double lon) {
    const double w = extent_.east - extent_.west;
    if (w <= 0.0) return std::size_t{0};
    const auto c = static_cast<std::ptrdiff_t>(std::floor((lon - extent_.west) / w * static_cast<double>(grid_cols_)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(grid_cols_) - 1));
  };
  const auto row_of = [&](double lat) {
    const double h = extent_.north - extent_.south;
    if (h <= 0.0) return std::size_t{0};
    const auto r = static_cast<std::ptrdiff_t>(std::floor((lat - extent_.south) / h * static_cast<double>(grid_rows_)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(grid_rows_) - 1));
  };

  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& b = bounds_[i];
    for (std::size_t row = row_of(b.south); row <= row_of(b.north); ++row) {
      for (std::size_t col = col_of(b.west); col <= col_of(b.east); ++col) {
        cells_[row * grid_cols_ + col].push_back(i);  // ascending i by construction
      }
    }
  }
}

std::optional<std::size_t> RegionSet::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> RegionSet::ids() const {
  std::vector<std::string> out;
  out.reserve(regions_.size());
  for (const auto& r : regions_) out.push_back(r.id);
  return out;
}

std::optional<std::size_t> RegionSet::locate(const GeoPoint& p) const {
  if (regions_.empty() || !extent_.contains(p)) return std::nullopt;
  const double w = extent_.east - extent_.west;
  const double h = extent_.north - extent_.south;
  std::size_t col = 0;
  std::size_t row = 0;
  if (w > 0.0) {
    const auto c = static_cast<std::ptrdiff_t>(std::floor((p.lon - extent_.west) / w * static_cast<double>(grid_cols_)));
    col = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(grid_cols_) - 1));
  }
  if (h > 0.0) {
    const auto r = static_cast<std::ptrdiff_t>(std::floor((p.lat - extent_.south) / h * static_cast<double>(grid_rows_)));
    row = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(grid_rows_) - 1));
  }
  for (std::size_t i : cells_[row * grid_cols_ + col]) {
    if (bounds_[i].contains(p) && contains(regions_[i], p)) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> RegionSet::locate_linear(const GeoPoint& p) const {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (contains(regions_[i], p)) return i;
  }
  return std::nullopt;
}

std::optional<std::string> point_in_region(const GeoPoint& p, const RegionSet& rs) {
  if (rs.empty()) throw std::invalid_argument("point_in_region: empty region set");
  if (auto i = rs.locate(p)) return rs[*i].id;
  return std::nullopt;
}

std::optional<std::size_t> resolve_event_location(const EventLocation& loc, const RegionSet& rs) {
  if (const auto* p = std::get_if<GeoPoint>(&loc)) return rs.locate(*p);
  const auto& box = std::get<BoundingBox>(loc);
  if (box.place_type != PlaceType::city) return std::nullopt;
  return rs.locate(centroid(box));
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::vector<double> centroid_distances(const RegionSet& rs) {
  const std::size_t k = rs.size();
  std::vector<double> d(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = great_circle_km(rs[i].centroid, rs[j].centroid);
      d[i * k + j] = v;
      d[j * k + i] = v;
    }
  }
  return d;
}

}  // namespace commuteflow::geo
