#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commuteflow/cli.hpp"
#include "commuteflow/flow.hpp"
#include "commuteflow/geo.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using commuteflow::cli::run;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("commuteflow_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string p(const std::string& rel) const { return (root / rel).string(); }
  void write(const std::string& rel, const std::string& text) const { std::ofstream(root / rel, std::ios::binary) << text; }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cmd(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kTwoRegions = R"({"type":"FeatureCollection","features":[
  {"type":"Feature","properties":{"region_id":"A","name":"A","population":1000},
   "geometry":{"type":"Polygon","coordinates":[[[0,0],[0.1,0],[0.1,0.1],[0,0.1],[0,0]]]}},
  {"type":"Feature","properties":{"region_id":"B","name":"B","population":1000},
   "geometry":{"type":"Polygon","coordinates":[[[0.1,0],[0.2,0],[0.2,0.1],[0.1,0.1],[0.1,0]]]}}]})";

// Synthesizes a small world into `dir` and ingests it into `dir/ingest`.
void prepare(const Workspace& w) {
  w.write("cfg.json", R"({"seed":21,"grid":{"rows":3,"cols":3},"commuters":{"users":400}})");
  REQUIRE(cmd({"synth", "--config", w.p("cfg.json"), "--out", w.p("s")}).code == 0);
  REQUIRE(cmd({"ingest", "--events", w.p("s/events.jsonl"), "--regions", w.p("s/regions.geojson"), "--out",
               w.p("i")})
              .code == 0);
}

}  // namespace

TEST_CASE("synth command") {
  Workspace w("synth");
  w.write("cfg.json", R"({"seed":2,"grid":{"rows":1,"cols":2},"commuters":{"users":20}})");
  const auto r = cmd({"synth", "--config", w.p("cfg.json"), "--out", w.p("a")});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["command"] == "synth");
  CHECK(read_json(w.p("a/regions.geojson"))["features"].size() == 2);
  REQUIRE(cmd({"synth", "--config", w.p("cfg.json"), "--out", w.p("b")}).code == 0);
  for (const char* f : {"regions.geojson", "events.jsonl", "truth.csv"}) {
    CHECK(commuteflow::cli::sha256_file(w.p(std::string("a/") + f)) ==
          commuteflow::cli::sha256_file(w.p(std::string("b/") + f)));
  }
  const auto m = read_json(w.p("a/manifest.json"));
  CHECK(m["seed"] == 2);
  CHECK(m["inputs"][w.p("cfg.json")] == commuteflow::cli::sha256_file(w.p("cfg.json")));
  CHECK(m["flags"]["--config"] == w.p("cfg.json"));

  w.write("bad.json", R"({"grid":{"rows":1,"cols":2}})");
  const auto bad = cmd({"synth", "--config", w.p("bad.json"), "--out", w.p("c")});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("seed") != std::string::npos);
}

TEST_CASE("sha256 digests") {
  CHECK(commuteflow::cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(commuteflow::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("ingest command") {
  Workspace w("ingest");
  prepare(w);
  const auto rep = read_json(w.p("i/ingest_report.json"));
  CHECK(rep["assigned_fraction"] == 1.0);
  CHECK(rep["users_after_filter"] == 400);
  CHECK(rep["users_before_filter"] == 400);

  w.write("r.geojson", kTwoRegions);
  w.write("e.jsonl",
          "{\"user_id\":\"u\",\"ts\":\"2015-06-01T12:00:00Z\",\"point\":{\"lon\":0.05,\"lat\":0.05}}\n"
          "{\"user_id\":\"u\",\"ts\":\"2015-06-01T12:00:00Z\",\"place\":{\"bbox\":[-8,49,2,59],\"type\":\"country\"}}\n");
  REQUIRE(cmd({"ingest", "--events", w.p("e.jsonl"), "--regions", w.p("r.geojson"), "--out", w.p("c")}).code == 0);
  const auto c = read_json(w.p("c/ingest_report.json"));
  CHECK(c["assigned_fraction"] == 0.5);
  CHECK(c["drops"]["unresolved"] == 1);

  w.write("empty.jsonl", "");
  REQUIRE(cmd({"ingest", "--events", w.p("empty.jsonl"), "--regions", w.p("r.geojson"), "--out", w.p("z")}).code == 0);
  CHECK(read_json(w.p("z/ingest_report.json"))["users_after_filter"] == 0);

  CHECK(cmd({"ingest", "--events", w.p("missing.jsonl"), "--regions", w.p("r.geojson"), "--out", w.p("m")}).code != 0);
  CHECK(cmd({"ingest", "--regions", w.p("r.geojson"), "--out", w.p("m")}).code != 0);
}

TEST_CASE("infer command") {
  Workspace w("infer");
  prepare(w);
  const std::string regions = w.p("s/regions.geojson");
  REQUIRE(cmd({"infer", "--profiles", w.p("i/profiles.jsonl"), "--regions", regions, "--out", w.p("h")}).code == 0);
  const auto rs = commuteflow::geo::load_regions_geojson(regions);
  const auto est = commuteflow::flow::read_od_csv_file(w.p("h/flows.csv"), rs);
  const auto truth = commuteflow::flow::read_od_csv_file(w.p("s/truth.csv"), rs);
  CHECK(est.values == truth.values);
  CHECK(slurp(w.p("h/assignments.csv")).rfind("user_id,home_region,work_region\n", 0) == 0);

  REQUIRE(cmd({"infer", "--profiles", w.p("i/profiles.jsonl"), "--regions", regions, "--lambda-sweep", "0.70:0.95:0.05",
               "--out", w.p("sw")})
              .code == 0);
  for (const char* l : {"0.70", "0.75", "0.80", "0.85", "0.90", "0.95"}) {
    CHECK(fs::exists(w.p(std::string("sw/flows_lambda_") + l + ".csv")));
  }
  CHECK(read_json(w.p("sw/infer_report.json"))["runs"].size() == 6);

  // Every tweet sits in the restricted home window, so no user has a work region.
  w.write("r.geojson", kTwoRegions);
  std::string events;
  for (int d = 0; d < 60; d += 6) {
    char line[200];
    std::snprintf(line, sizeof line,
                  "{\"user_id\":\"u\",\"ts\":\"2015-06-%02dT20:30:00Z\",\"point\":{\"lon\":0.05,\"lat\":0.05}}\n",
                  1 + d % 28);
    events += line;
  }
  w.write("night.jsonl", events);
  REQUIRE(cmd({"ingest", "--events", w.p("night.jsonl"), "--regions", w.p("r.geojson"), "--min-span-days", "0",
               "--out", w.p("ni")})
              .code == 0);
  const auto soft = cmd({"infer", "--profiles", w.p("ni/profiles.jsonl"), "--regions", w.p("r.geojson"), "--mode",
                         "temporal-soft", "--window", "restricted", "--out", w.p("ns")});
  REQUIRE(soft.code == 0);
  CHECK(soft.err.find("warning") != std::string::npos);
  const auto rep = read_json(w.p("ns/infer_report.json"));
  CHECK(rep["runs"][0]["users_assigned"] == 0);
  CHECK(rep["warnings"].size() == 1);
  CHECK(slurp(w.p("ns/flows.csv")) == "#provenance=twitter-soft,diagonal=true\nhome_id,work_id,value\n");

  const auto mismatch = cmd({"infer", "--profiles", w.p("i/profiles.jsonl"), "--regions", w.p("r.geojson"), "--out",
                             w.p("mm")});
  CHECK(mismatch.code != 0);
  CHECK(mismatch.err.find("different region set") != std::string::npos);
}

TEST_CASE("radiation and evaluate commands") {
  Workspace w("radiation");
  w.write("r.geojson", kTwoRegions);
  REQUIRE(cmd({"radiation", "--regions", w.p("r.geojson"), "--total-commuters", "500", "--out", w.p("r")}).code == 0);
  CHECK(slurp(w.p("r/flows.csv")) == "#provenance=radiation-std,diagonal=false\nhome_id,work_id,value\nA,B,250\nB,A,250\n");

  w.write("zero.geojson", std::string(kTwoRegions).replace(std::string(kTwoRegions).find("1000"), 4, "0"));
  const auto z = cmd({"radiation", "--regions", w.p("zero.geojson"), "--total-commuters", "5", "--out", w.p("z")});
  CHECK(z.code != 0);
  CHECK(z.err.find("region A") != std::string::npos);

  w.write("nopop.geojson", R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"region_id":"Nowhere"},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]})");
  const auto np = cmd({"radiation", "--regions", w.p("nopop.geojson"), "--total-commuters", "5", "--out", w.p("n")});
  CHECK(np.code != 0);
  CHECK(np.err.find("Nowhere") != std::string::npos);

  REQUIRE(cmd({"radiation", "--regions", w.p("r.geojson"), "--total-commuters", "500", "--model", "one-param",
               "--alpha-from-area", "per-region", "--out", w.p("p")})
              .code == 0);
  CHECK(slurp(w.p("p/alpha.csv")).rfind("region_id,l_km,alpha,clamped\n", 0) == 0);
  CHECK(cmd({"radiation", "--regions", w.p("r.geojson"), "--total-commuters", "5", "--model", "one-param", "--out",
             w.p("q")})
            .code != 0);

  w.write("truth.csv", "#provenance=census,diagonal=true\nhome_id,work_id,value\nA,A,5\nA,B,3\nB,A,1\n");
  REQUIRE(cmd({"evaluate", "--estimate", w.p("truth.csv"), "--truth", w.p("truth.csv"), "--regions", w.p("r.geojson"),
               "--out", w.p("e")})
              .code == 0);
  const auto rep = read_json(w.p("e/report.json"));
  CHECK(rep["cpc"] == 1.0);
  CHECK(fs::exists(w.p("e/outward_error.csv")));
  CHECK(fs::exists(w.p("e/distance_histogram.csv")));
  CHECK(fs::exists(w.p("e/scatter.csv")));

  // The radiation estimate has no diagonal: all-commuting scoring is refused,
  // external scoring drops the truth's internal flows.
  CHECK(cmd({"evaluate", "--estimate", w.p("r/flows.csv"), "--truth", w.p("truth.csv"), "--regions", w.p("r.geojson"),
             "--out", w.p("x")})
            .code != 0);
  REQUIRE(cmd({"evaluate", "--estimate", w.p("r/flows.csv"), "--truth", w.p("truth.csv"), "--regions",
               w.p("r.geojson"), "--commuting", "external", "--svg", "--out", w.p("x")})
              .code == 0);
  CHECK(read_json(w.p("x/report.json"))["cpc"] == 1.0);
  CHECK(read_json(w.p("x/report.json"))["truth_total"] == 4.0);
  CHECK(fs::exists(w.p("x/scatter.svg")));
}

TEST_CASE("cluster command") {
  Workspace w("cluster");
  prepare(w);
  const std::string regions = w.p("s/regions.geojson");
  REQUIRE(cmd({"cluster", "--events", w.p("s/events.jsonl"), "--regions", regions, "--truth", w.p("s/truth.csv"),
               "--replicates", "99", "--out", w.p("c")})
              .code == 0);
  const auto rep = read_json(w.p("c/cluster_report.json"));
  CHECK(rep["k"] == 2);
  CHECK(rep["medoids"].size() == 2);
  CHECK(rep.contains("correlation"));
  CHECK(slurp(w.p("c/clusters.csv")).rfind("region_id,cluster_label,is_medoid\n", 0) == 0);

  const auto big = cmd({"cluster", "--profiles", w.p("i/profiles.jsonl"), "--regions", regions, "--k", "10", "--out",
                        w.p("k")});
  CHECK(big.code != 0);
  CHECK(big.err.find("clusters") != std::string::npos);
}
