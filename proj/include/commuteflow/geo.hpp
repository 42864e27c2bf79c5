#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace commuteflow::geo {

/// Mean Earth radius (IUGG), km.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

bool is_valid(const GeoPoint& p);

enum class PlaceType { city, admin, country, other };

std::optional<PlaceType> parse_place_type(std::string_view s);
std::string_view to_string(PlaceType t);

struct BoundingBox {
  double west = 0.0;
  double south = 0.0;
  double east = 0.0;
  double north = 0.0;
  PlaceType place_type = PlaceType::other;

  bool contains(const GeoPoint& p) const {
    return p.lon >= west && p.lon <= east && p.lat >= south && p.lat <= north;
  }
};

bool is_valid(const BoundingBox& b);

/// Midpoint of the box in plain lon/lat.
GeoPoint centroid(const BoundingBox& b);

/// A closed ring: first vertex repeated as the last.
using Ring = std::vector<GeoPoint>;

struct Region {
  std::string id;
  std::string name;
  std::vector<Ring> rings;  // outer rings and holes of every part; even-odd fill
  std::int64_t population = 0;
  GeoPoint centroid;

  BoundingBox bounds() const;
};

/// Even-odd crossing count of a horizontal ray from p towards +lon against all
/// rings. Edges are half-open in latitude so shared borders resolve to one side.
bool contains(const Region& r, const GeoPoint& p);

/// Area-weighted planar centroid of the even-odd filled rings.
GeoPoint planar_centroid(const std::vector<Ring>& rings);

/// Approximate spherical area of the filled rings, km².
double area_km2(const Region& r);

/// Immutable ordered collection of regions with an id index and a uniform grid
/// over polygon bounding boxes.
class RegionSet {
 public:
  RegionSet() = default;
  /// Validates every region; throws std::invalid_argument on a broken invariant.
  explicit RegionSet(std::vector<Region> regions);

  std::size_t size() const { return regions_.size(); }
  bool empty() const { return regions_.empty(); }
  const Region& operator[](std::size_t i) const { return regions_[i]; }
  const std::vector<Region>& regions() const { return regions_; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Index of the first region (in set order) containing p, via the grid.
  std::optional<std::size_t> locate(const GeoPoint& p) const;
  /// Same contract as locate() without the grid.
  std::optional<std::size_t> locate_linear(const GeoPoint& p) const;

 private:
  void build_grid();

  std::vector<Region> regions_;
  std::vector<BoundingBox> bounds_;
  std::unordered_map<std::string, std::size_t> index_;

  BoundingBox extent_;
  std::size_t grid_cols_ = 0;
  std::size_t grid_rows_ = 0;
  std::vector<std::vector<std::size_t>> cells_;
};

std::optional<std::string> point_in_region(const GeoPoint& p, const RegionSet& rs);

using EventLocation = std::variant<GeoPoint, BoundingBox>;

/// Exact points resolve directly; city boxes resolve through their centroid;
/// every other place type is too coarse to assign.
std::optional<std::size_t> resolve_event_location(const EventLocation& loc, const RegionSet& rs);

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const GeoPoint& a, const GeoPoint& b);

/// Symmetric K×K centroid distance matrix, row-major.
std::vector<double> centroid_distances(const RegionSet& rs);

// GeoJSON FeatureCollection with `region_id`, `name`, `population` and an
// optional `centroid` property per feature. Polygon and MultiPolygon only.
RegionSet load_regions_geojson(const std::string& path);
RegionSet parse_regions_geojson(std::string_view text);
std::string to_geojson(const RegionSet& rs);

}  // namespace commuteflow::geo
