#include <random>

#include "commuteflow/geo.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace commuteflow::geo;
using testsupport::square;

TEST_CASE("bounding box centroid is the plain midpoint") {
  CHECK(centroid(BoundingBox{0, 0, 2, 2}) == GeoPoint{1, 1});
  CHECK(centroid(BoundingBox{1, 1, 1, 1}) == GeoPoint{1, 1});
  CHECK(centroid(BoundingBox{-1, -3, 3, 1}) == GeoPoint{1, -1});
}

TEST_CASE("point in region") {
  const RegionSet lone({square("A", 0, 0, 1)});
  CHECK(point_in_region({0.5, 0.5}, lone) == "A");
  CHECK_FALSE(point_in_region({2.0, 0.5}, lone));
  CHECK_THROWS_AS(point_in_region({0, 0}, RegionSet{}), std::invalid_argument);

  SUBCASE("hole is outside") {
    Region r = square("H", 0, 0, 4);
    r.rings.push_back(testsupport::box_ring(1, 1, 3, 3));
    r.centroid = {0.5, 0.5};
    const RegionSet rs({r});
    const GeoPoint p{2, 2};
    int crossings = 0;
    for (const auto& ring : r.rings) crossings += testsupport::brute_crossings(ring, p);
    CHECK(crossings == 2);
    CHECK_FALSE(point_in_region(p, rs));
    CHECK(point_in_region({0.5, 2}, rs) == "H");
  }

  SUBCASE("shared border belongs to exactly one region") {
    const RegionSet rs({square("W", 0, 0, 1), square("E", 1, 0, 1), square("N", 0, 1, 1)});
    for (const GeoPoint p : {GeoPoint{1.0, 0.5}, GeoPoint{0.5, 1.0}, GeoPoint{1.0, 1.0}, GeoPoint{1.0, 0.0}}) {
      int owners = 0;
      for (const auto& r : rs.regions()) owners += contains(r, p) ? 1 : 0;
      CHECK(owners <= 1);
    }
    CHECK(point_in_region({1.0, 0.5}, rs).has_value());
    CHECK(point_in_region({0.5, 1.0}, rs).has_value());
  }

  SUBCASE("overlapping bounding boxes still give one answer") {
    // An L-shape whose box covers the square nested in its notch.
    Region l;
    l.id = "L";
    l.rings = {{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}, {0, 0}}};
    l.centroid = {0.5, 0.5};
    const RegionSet rs({l, square("S", 1, 1, 1)});
    CHECK(point_in_region({1.5, 1.5}, rs) == "S");
    CHECK(point_in_region({0.5, 1.5}, rs) == "L");
  }
}

TEST_CASE("grid index agrees with a linear scan") {
  std::vector<Region> regions;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 9; ++c) {
      regions.push_back(square("G" + std::to_string(r * 9 + c), -3 + 0.25 * c, 50 + 0.25 * r, 0.25));
    }
  }
  const RegionSet rs(std::move(regions));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> lon(-3.3, -0.5);
  std::uniform_real_distribution<double> lat(49.8, 51.7);
  for (int k = 0; k < 20000; ++k) {
    const GeoPoint p{lon(gen), lat(gen)};
    REQUIRE(rs.locate(p) == rs.locate_linear(p));
  }
  // Grid lines and vertices exactly.
  for (int r = 0; r <= 6; ++r) {
    for (int c = 0; c <= 9; ++c) {
      const GeoPoint p{-3 + 0.25 * c, 50 + 0.25 * r};
      REQUIRE(rs.locate(p) == rs.locate_linear(p));
    }
  }
}

TEST_CASE("event location resolution") {
  const RegionSet rs({square("A", 0, 0, 1), square("B", 1, 0, 1)});
  CHECK(resolve_event_location(GeoPoint{0.5, 0.5}, rs) == 0u);
  CHECK(resolve_event_location(BoundingBox{1.2, 0.2, 1.6, 0.6, PlaceType::city}, rs) == 1u);
  CHECK_FALSE(resolve_event_location(BoundingBox{1.2, 0.2, 1.6, 0.6, PlaceType::admin}, rs));
  CHECK_FALSE(resolve_event_location(BoundingBox{-1, -1, 3, 3, PlaceType::country}, rs));
  for (double x = -0.5; x < 2.5; x += 0.05) {
    const GeoPoint p{x, 0.3};
    const auto idx = resolve_event_location(p, rs);
    const auto id = point_in_region(p, rs);
    CHECK(idx.has_value() == id.has_value());
    if (idx) CHECK(rs[*idx].id == *id);
  }
}

TEST_CASE("great circle distance") {
  CHECK(great_circle_km({3, 4}, {3, 4}) == 0.0);
  CHECK(great_circle_km({0, 0}, {0, 1}) == doctest::Approx(kEarthRadiusKm * std::numbers::pi / 180).epsilon(1e-12));
  const GeoPoint london{-0.1276, 51.5072};
  const GeoPoint edinburgh{-3.1883, 55.9533};
  CHECK(std::abs(great_circle_km(london, edinburgh) - 534.0) < 1.0);
  CHECK(great_circle_km(london, edinburgh) == doctest::Approx(testsupport::cosine_law_km(london, edinburgh)).epsilon(1e-9));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> lon(-180, 180);
  std::uniform_real_distribution<double> lat(-90, 90);
  for (int k = 0; k < 2000; ++k) {
    const GeoPoint a{lon(gen), lat(gen)};
    const GeoPoint b{lon(gen), lat(gen)};
    const GeoPoint c{lon(gen), lat(gen)};
    const double ab = great_circle_km(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == great_circle_km(b, a));
    CHECK(ab <= great_circle_km(a, c) + great_circle_km(c, b) + 1e-9 * std::max(1.0, ab));
  }
}

TEST_CASE("region set validation") {
  Region open = square("X", 0, 0, 1);
  open.rings[0].pop_back();
  CHECK_THROWS_AS(RegionSet({open}), std::invalid_argument);
  Region negative = square("N", 0, 0, 1, -1);
  CHECK_THROWS_AS(RegionSet({negative}), std::invalid_argument);
  Region far = square("F", 0, 0, 1);
  far.centroid = {5, 5};
  CHECK_THROWS_AS(RegionSet({far}), std::invalid_argument);
  CHECK_THROWS_AS(RegionSet({square("D", 0, 0, 1), square("D", 1, 0, 1)}), std::invalid_argument);

  const RegionSet rs({square("b", 0, 0, 1), square("a", 1, 0, 1)});
  CHECK(rs.ids() == std::vector<std::string>{"b", "a"});
  CHECK(rs.index_of("a") == 1u);
  CHECK_FALSE(rs.index_of("z"));
}

TEST_CASE("planar centroid and area") {
  const auto c = planar_centroid({testsupport::box_ring(0, 0, 2, 2), testsupport::box_ring(0, 0, 1, 1)});
  // Square minus its lower-left quarter: three unit cells.
  CHECK(c.lon == doctest::Approx(7.0 / 6.0));
  CHECK(c.lat == doctest::Approx(7.0 / 6.0));
  const Region cell = square("A", 0, 0, 1);
  const double side = kEarthRadiusKm * std::numbers::pi / 180;
  CHECK(area_km2(cell) == doctest::Approx(side * side).epsilon(1e-3));
}

TEST_CASE("GeoJSON loading") {
  const std::string doc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"region_id":"A","name":"Alpha","population":120},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
    {"type":"Feature","properties":{"region_id":"B","name":"Beta","population":80,"centroid":[1.25,0.25]},
     "geometry":{"type":"MultiPolygon","coordinates":[[[[1,0],[2,0],[2,1],[1,1],[1,0]]],[[[3,0],[4,0],[4,1],[3,1],[3,0]]]]}}]})";
  const RegionSet rs = parse_regions_geojson(doc);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].population == 120);
  CHECK(rs[0].centroid == GeoPoint{0.5, 0.5});
  CHECK(rs[1].centroid == GeoPoint{1.25, 0.25});
  CHECK(rs[1].rings.size() == 2);
  CHECK(point_in_region({3.5, 0.5}, rs) == "B");

  const RegionSet again = parse_regions_geojson(to_geojson(rs));
  CHECK(again.ids() == rs.ids());
  CHECK(again[1].centroid == rs[1].centroid);

  const std::string missing = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"region_id":"Q"},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]})";
  try {
    parse_regions_geojson(missing);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("Q") != std::string::npos);
  }
}
