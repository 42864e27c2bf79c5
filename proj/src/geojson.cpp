#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "commuteflow/geo.hpp"
#include "json.hpp"

namespace commuteflow::geo {

using json = nlohmann::json;

namespace {

Ring parse_ring(const json& coords, const std::string& where) {
  if (!coords.is_array()) throw std::invalid_argument(where + ": ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& v : coords) {
    if (!v.is_array() || v.size() < 2 || !v[0].is_number() || !v[1].is_number()) {
      throw std::invalid_argument(where + ": malformed position");
    }
    ring.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return ring;
}

void append_polygon(const json& poly, std::vector<Ring>& rings, const std::string& where) {
  if (!poly.is_array()) throw std::invalid_argument(where + ": polygon is not an array");
  for (const auto& ring : poly) rings.push_back(parse_ring(ring, where));
}

std::string feature_label(const json& props, std::size_t n) {
  if (props.is_object()) {
    if (auto it = props.find("name"); it != props.end() && it->is_string()) return it->get<std::string>();
    if (auto it = props.find("region_id"); it != props.end() && it->is_string()) return it->get<std::string>();
  }
  return "feature #" + std::to_string(n);
}

}  // namespace

RegionSet parse_regions_geojson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("regions: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw std::invalid_argument("regions: expected a GeoJSON FeatureCollection");
  }

  std::vector<Region> regions;
  std::size_t n = 0;
  for (const auto& feature : doc["features"]) {
    const json props = feature.value("properties", json::object());
    const std::string label = "region " + feature_label(props, n);
    ++n;

    Region r;
    if (!props.contains("region_id") || !props["region_id"].is_string()) {
      throw std::invalid_argument(label + ": missing string property region_id");
    }
    r.id = props["region_id"].get<std::string>();
    r.name = props.contains("name") && props["name"].is_string() ? props["name"].get<std::string>() : r.id;

    if (!props.contains("population") || !props["population"].is_number()) {
      throw std::invalid_argument(label + ": missing population property");
    }
    const auto& pop = props["population"];
    if (pop.is_number_integer()) {
      r.population = pop.get<std::int64_t>();
    } else {
      const double v = pop.get<double>();
      if (v != std::floor(v)) throw std::invalid_argument(label + ": population is not an integer");
      r.population = static_cast<std::int64_t>(v);
    }

    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw std::invalid_argument(label + ": missing geometry");
    }
    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates")) throw std::invalid_argument(label + ": geometry has no coordinates");
    if (type == "Polygon") {
      append_polygon(geom["coordinates"], r.rings, label);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom["coordinates"]) append_polygon(poly, r.rings, label);
    } else {
      throw std::invalid_argument(label + ": unsupported geometry type '" + type + "'");
    }

    if (props.contains("centroid") && !props["centroid"].is_null()) {
      const auto& c = props["centroid"];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
        throw std::invalid_argument(label + ": centroid must be [lon, lat]");
      }
      r.centroid = {c[0].get<double>(), c[1].get<double>()};
    } else {
      r.centroid = planar_centroid(r.rings);
    }
    regions.push_back(std::move(r));
  }
  return RegionSet(std::move(regions));
}

RegionSet load_regions_geojson(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open regions file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_regions_geojson(buf.str());
}

std::string to_geojson(const RegionSet& rs) {
  json features = json::array();
  for (const auto& r : rs.regions()) {
    json rings = json::array();
    for (const auto& ring : r.rings) {
      json coords = json::array();
      for (const auto& v : ring) coords.push_back({v.lon, v.lat});
      rings.push_back(std::move(coords));
    }
    json feature = {
        {"type", "Feature"},
        {"properties",
         {{"region_id", r.id},
          {"name", r.name},
          {"population", r.population},
          {"centroid", {r.centroid.lon, r.centroid.lat}}}},
        {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}},
    };
    features.push_back(std::move(feature));
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

}  // namespace commuteflow::geo
