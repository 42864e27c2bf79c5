#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "commuteflow/assign.hpp"
#include "commuteflow/cli.hpp"
#include "commuteflow/cluster.hpp"
#include "commuteflow/flow.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/ingest.hpp"
#include "commuteflow/metrics.hpp"
#include "commuteflow/radiation.hpp"
#include "commuteflow/synth.hpp"
#include "json.hpp"

namespace commuteflow::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// State shared by a command run: where outputs go, which inputs were read,
// and anything worth warning about.
struct Run {
  std::ostream& out;
  std::ostream& err;
  fs::path out_dir;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;

  fs::path path(const std::string& name) const { return out_dir / name; }

  void input(const std::string& p) {
    if (!fs::is_regular_file(p)) throw std::runtime_error("input file not found: " + p);
    inputs.push_back(p);
  }

  void warn(std::string msg) {
    err << "warning: " << msg << '\n';
    warnings.push_back(std::move(msg));
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json flags_of(const CLI::App& sub) {
  json f = json::object();
  for (const CLI::Option* o : sub.get_options()) {
    const std::string name = o->get_name();
    if (name == "--help") continue;
    if (o->get_type_size_max() == 0) {
      f[name] = o->count() > 0;
    } else if (o->count() > 0) {
      std::string v;
      for (const auto& r : o->results()) v += (v.empty() ? "" : ",") + r;
      f[name] = v;
    } else if (!o->get_default_str().empty()) {
      f[name] = o->get_default_str();
    } else {
      f[name] = nullptr;
    }
  }
  return f;
}

geo::RegionSet load_regions(Run& run, const std::string& path) {
  run.input(path);
  return geo::load_regions_geojson(path);
}

// "a:b:s" (inclusive of b) or a comma-separated list.
std::vector<double> parse_range(const std::string& spec, const char* what) {
  std::vector<double> v;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(x)) {
      throw std::invalid_argument(std::string("bad number '") + s + "' in " + what);
    }
    return x;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument(std::string(what) + " must look like start:stop:step");
    const double a = number(parts[0]);
    const double b = number(parts[1]);
    const double s = number(parts[2]);
    if (!(s > 0.0) || b < a) throw std::invalid_argument(std::string(what) + " needs start <= stop and a positive step");
    for (std::size_t k = 0;; ++k) {
      const double x = a + static_cast<double>(k) * s;
      if (x > b + 1e-9 * std::max(1.0, std::abs(b))) break;
      v.push_back(std::min(x, b));
    }
  } else {
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) v.push_back(number(p));
  }
  if (v.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  return v;
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string events;
  std::string regions;
  std::uint64_t min_tweets = 5;
  std::int64_t min_span_days = 30;
};

void cmd_ingest(const IngestOptions& o, Run& run) {
  const geo::RegionSet rs = load_regions(run, o.regions);
  run.input(o.events);
  std::ifstream in(o.events, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + o.events);

  ingest::ProfileBuilder builder(rs);
  std::size_t events = 0;
  const auto [lines, errors] = ingest::for_each_event(in, [&](ingest::EventRecord&& e) {
    ++events;
    builder.add(e);
  });
  const ingest::FilterOptions filter{o.min_tweets, o.min_span_days};
  const ingest::ProfileMap kept = ingest::filter_users(builder.profiles(), filter);

  std::ofstream cache(run.path("profiles.jsonl"), std::ios::binary);
  if (!cache) throw std::runtime_error("cannot write profile cache");
  ingest::write_profile_cache(cache, kept, rs.ids());

  const auto& tally = builder.tally();
  json report;
  report["lines"] = lines;
  report["parse_errors"] = errors;
  report["events"] = events;
  report["assigned_events"] = tally.assigned;
  report["assigned_fraction"] = events == 0 ? json(nullptr)
                                            : json(static_cast<double>(tally.assigned) / static_cast<double>(events));
  report["drops"] = {{"parse_errors", errors}, {"unresolved", tally.unresolved}};
  report["users_before_filter"] = builder.profiles().size();
  report["users_after_filter"] = kept.size();
  report["filter"] = {{"min_tweets", o.min_tweets}, {"min_span_days", o.min_span_days}};
  if (errors > 0) run.warn(std::to_string(errors) + " event lines could not be parsed");
  report["warnings"] = run.warnings;
  write_json(run.path("ingest_report.json"), report);
}

// ----------------------------------------------------------------- infer

struct InferOptions {
  std::string profiles;
  std::string regions;
  std::string mode = "hard";
  double lambda = 0.9;
  std::string lambda_sweep;
  std::string window = "workday";
  bool weekdays_only_work = false;
};

void write_assignments(const fs::path& p, const std::vector<assign::HardAssignment>& a) {
  std::ostringstream s;
  s << "user_id,home_region,work_region\n";
  for (const auto& x : a) s << x.user_id << ',' << x.home << ',' << x.work << '\n';
  write_text(p, s.str());
}

json matrix_summary(const flow::FlowMatrix& m) {
  double diag = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) diag += m(i, i);
  return {{"total", m.values.total()}, {"internal", diag}};
}

void cmd_infer(const InferOptions& o, Run& run) {
  const geo::RegionSet rs = load_regions(run, o.regions);
  run.input(o.profiles);
  const ingest::ProfileCache cache = ingest::read_profile_cache_file(o.profiles);
  if (cache.region_ids != rs.ids()) {
    throw std::runtime_error("profile cache was built against a different region set than " + o.regions);
  }
  const auto mode = assign::parse_mode(o.mode);
  if (!mode) throw std::invalid_argument("unknown --mode " + o.mode);
  const auto preset = assign::parse_window_preset(o.window);
  if (!preset) throw std::invalid_argument("unknown --window " + o.window);

  json report;
  report["mode"] = o.mode;
  report["users_in"] = cache.profiles.size();

  auto empty_warning = [&](std::size_t assigned) {
    if (assigned == 0) run.warn("every user was discarded; the flow matrix is empty");
  };

  if (*mode == assign::Mode::hard) {
    std::vector<double> lambdas{o.lambda};
    if (!o.lambda_sweep.empty()) lambdas = parse_range(o.lambda_sweep, "--lambda-sweep");
    json runs = json::array();
    for (double lambda : lambdas) {
      std::vector<assign::HardAssignment> assigned;
      for (const auto& [id, p] : cache.profiles) assigned.push_back(assign::assign_hard(p, lambda));
      const auto m = flow::flows_from_hard(assigned, rs);
      const std::string name = o.lambda_sweep.empty() ? "flows.csv" : "flows_lambda_" + fixed2(lambda) + ".csv";
      flow::write_od_csv_file(run.path(name).string(), m);
      if (o.lambda_sweep.empty()) write_assignments(run.path("assignments.csv"), assigned);
      json r = matrix_summary(m);
      r["lambda"] = lambda;
      r["file"] = name;
      r["users_assigned"] = assigned.size();
      runs.push_back(r);
    }
    empty_warning(cache.profiles.size());
    report["runs"] = runs;
  } else {
    assign::AssignmentPolicy policy = assign::make_policy(*mode, *preset, o.weekdays_only_work);
    report["window"] = o.window;
    report["weekdays_only_work"] = o.weekdays_only_work;
    flow::FlowMatrix m;
    std::size_t assigned_count = 0;
    if (*mode == assign::Mode::temporal_hard) {
      std::vector<assign::HardAssignment> assigned;
      for (const auto& [id, p] : cache.profiles) {
        if (auto a = assign::assign_temporal_hard(p, policy)) assigned.push_back(std::move(*a));
      }
      m = flow::flows_from_hard(assigned, rs);
      write_assignments(run.path("assignments.csv"), assigned);
      assigned_count = assigned.size();
    } else {
      std::vector<assign::SoftAssignment> assigned;
      for (const auto& [id, p] : cache.profiles) {
        if (auto a = assign::assign_soft(p, policy, rs)) assigned.push_back(std::move(*a));
      }
      m = assigned.empty() ? flow::FlowMatrix(rs.ids(), flow::Provenance::twitter_soft, true)
                           : flow::flows_from_soft(assigned, rs);
      std::ostringstream s;
      s << "user_id,region,weight,channel\n";
      for (const auto& a : assigned) {
        for (const auto& [pos, w] : a.home.entries) s << a.user_id << ',' << rs[pos].id << ',' << flow::format_double(w) << ",home\n";
        for (const auto& [pos, w] : a.work.entries) s << a.user_id << ',' << rs[pos].id << ',' << flow::format_double(w) << ",work\n";
      }
      write_text(run.path("assignments_soft.csv"), s.str());
      assigned_count = assigned.size();
    }
    flow::write_od_csv_file(run.path("flows.csv").string(), m);
    empty_warning(assigned_count);
    json r = matrix_summary(m);
    r["file"] = "flows.csv";
    r["users_assigned"] = assigned_count;
    r["users_discarded"] = cache.profiles.size() - assigned_count;
    report["runs"] = json::array({r});
  }
  report["warnings"] = run.warnings;
  write_json(run.path("infer_report.json"), report);
}

// ------------------------------------------------------------- radiation

struct RadiationOptions {
  std::string regions;
  std::string model = "standard";
  std::optional<double> alpha;
  std::string alpha_from_area;
  std::string truth;
  std::string commuting = "external";
  std::optional<double> total_commuters;
};

void cmd_radiation(const RadiationOptions& o, Run& run) {
  const geo::RegionSet rs = load_regions(run, o.regions);
  const auto mode = flow::parse_commuting(o.commuting);
  if (!mode) throw std::invalid_argument("unknown --commuting " + o.commuting);
  const auto n = flow::populations(rs);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (!(n[i] > 0.0)) throw std::runtime_error("region " + rs[i].id + " has zero population");
  }

  flow::CommuterMarginals marginals;
  json report;
  if (!o.truth.empty()) {
    run.input(o.truth);
    marginals = flow::CommuterMarginals::from_flows(flow::read_od_csv_file(o.truth, rs), *mode, n);
    report["marginals"] = "truth:" + o.commuting;
  } else if (o.total_commuters) {
    marginals = flow::CommuterMarginals::uniform(*o.total_commuters, n);
    report["marginals"] = "uniform";
  } else {
    throw std::invalid_argument("radiation needs commuter totals: pass --truth or --total-commuters");
  }
  const auto in = radiation::RadiationInputs::from_regions(rs, marginals);

  radiation::RadiationResult result;
  report["model"] = o.model;
  if (o.model == "standard") {
    if (o.alpha || !o.alpha_from_area.empty()) throw std::invalid_argument("--alpha only applies to --model one-param");
    result = radiation::radiation_standard(in);
  } else if (o.model == "one-param") {
    std::vector<radiation::AlphaEstimate> est;
    if (o.alpha && !o.alpha_from_area.empty()) throw std::invalid_argument("pass either --alpha or --alpha-from-area");
    if (o.alpha) {
      if (!(*o.alpha > 0.0)) throw std::invalid_argument("--alpha must be positive");
      est.assign(rs.size(), radiation::AlphaEstimate{*o.alpha, std::nan(""), false});
      report["alpha_source"] = "flag";
    } else if (o.alpha_from_area == "per-region") {
      for (const auto& r : rs.regions()) est.push_back(radiation::alpha_estimate(geo::area_km2(r)));
      report["alpha_source"] = "per-region";
    } else if (o.alpha_from_area.rfind("global:", 0) == 0) {
      const auto l = parse_range(o.alpha_from_area.substr(7), "--alpha-from-area global:<l>");
      if (l.size() != 1) throw std::invalid_argument("--alpha-from-area global:<l> takes one length");
      est.assign(rs.size(), radiation::alpha_from_scale(l[0]));
      report["alpha_source"] = "global";
    } else {
      throw std::invalid_argument("one-param model needs --alpha or --alpha-from-area per-region|global:<l>");
    }
    std::vector<double> alpha;
    std::ostringstream s;
    s << "region_id,l_km,alpha,clamped\n";
    json clamped = json::array();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      alpha.push_back(est[i].alpha);
      s << rs[i].id << ',' << (std::isnan(est[i].l_km) ? "" : flow::format_double(est[i].l_km)) << ','
        << flow::format_double(est[i].alpha) << ',' << (est[i].clamped ? "true" : "false") << '\n';
      if (est[i].clamped) clamped.push_back(rs[i].id);
    }
    write_text(run.path("alpha.csv"), s.str());
    if (!clamped.empty()) run.warn(std::to_string(clamped.size()) + " region scales fell outside 1-65 km and were clamped");
    report["alpha_clamped"] = clamped;
    result = radiation::radiation_one_param(in, alpha);
  } else {
    throw std::invalid_argument("unknown --model " + o.model);
  }

  flow::write_od_csv_file(run.path("flows.csv").string(), result.flows);
  json zero = json::array();
  for (auto i : result.zero_rows) zero.push_back(rs[i].id);
  if (!zero.empty()) run.warn(std::to_string(zero.size()) + " origins received no flow");
  report["zero_rows"] = zero;
  report["total"] = result.flows.values.total();
  report["commuters_total"] = marginals.C;
  report["warnings"] = run.warnings;
  write_json(run.path("radiation_report.json"), report);
}

// -------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string estimate;
  std::string truth;
  std::string regions;
  std::string commuting = "all";
  std::string bins = "0:200:10";
  std::string normalize = "truth";
  bool svg = false;
};

std::string scatter_svg(const std::vector<std::pair<double, double>>& pts) {
  double hi = 1.0;
  for (const auto& [x, y] : pts) hi = std::max({hi, x, y});
  const double top = std::log10(hi) + 0.1;
  const double size = 400.0;
  const double pad = 40.0;
  auto px = [&](double v) { return pad + size * std::log10(std::max(v, 1.0)) / top; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\"" << size + 2 * pad
    << "\">\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << pad + size << "\" x2=\"" << pad + size << "\" y2=\"" << pad
    << "\" stroke=\"grey\"/>\n";
  s << "<text x=\"" << pad << "\" y=\"" << 2 * pad + size - 10 << "\">truth (log10, +1)</text>\n";
  s << "<text x=\"5\" y=\"" << pad - 10 << "\">estimate</text>\n";
  for (const auto& [x, y] : pts) {
    s << "<circle cx=\"" << px(x + 1.0) << "\" cy=\"" << 2 * pad + size - px(y + 1.0) << "\" r=\"1.5\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void cmd_evaluate(const EvaluateOptions& o, Run& run) {
  const geo::RegionSet rs = load_regions(run, o.regions);
  run.input(o.estimate);
  run.input(o.truth);
  flow::FlowMatrix est = flow::read_od_csv_file(o.estimate, rs);
  flow::FlowMatrix truth = flow::read_od_csv_file(o.truth, rs);
  const auto mode = flow::parse_commuting(o.commuting);
  if (!mode) throw std::invalid_argument("unknown --commuting " + o.commuting);
  const auto edges = parse_range(o.bins, "--bins");

  if (*mode == flow::Commuting::external) {
    est = flow::zero_diagonal(est);
    truth = flow::zero_diagonal(truth);
  } else if (!est.diagonal_meaningful || !truth.diagonal_meaningful) {
    throw std::invalid_argument("an input has no internal-commuting diagonal; use --commuting external");
  }

  json report;
  report["commuting"] = o.commuting;
  report["normalize"] = o.normalize;
  report["estimate_provenance"] = flow::to_string(est.provenance);
  report["truth_provenance"] = flow::to_string(truth.provenance);
  if (o.normalize == "truth") {
    const auto marginals = flow::CommuterMarginals::from_flows(truth, *mode, flow::populations(rs));
    auto nr = flow::normalize_rows(est, marginals, *mode);
    est = std::move(nr.flows);
    std::size_t missing = 0;
    for (auto i : nr.zero_rows) missing += marginals.c[i] > 0.0 ? 1 : 0;
    if (missing > 0) run.warn(std::to_string(missing) + " origins have truth commuters but no estimated flow");
  } else if (o.normalize == "uniform") {
    const double te = est.values.total();
    if (te > 0.0) {
      const double scale = truth.values.total() / te;
      for (double& v : est.values.values()) v *= scale;
    }
  } else if (o.normalize != "none") {
    throw std::invalid_argument("unknown --normalize " + o.normalize);
  }

  const auto r = metrics::cpc(est, truth);
  report["cpc"] = r.cpc;
  report["cpc_alt"] = r.cpc_alt;
  report["numerator"] = r.numerator;
  report["denominator"] = r.denominator;
  report["estimate_total"] = est.values.total();
  report["truth_total"] = truth.values.total();

  std::ostringstream oe;
  oe << "region_id,outward_error,defined\n";
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const bool ok = std::find(r.outward.zero_rows.begin(), r.outward.zero_rows.end(), i) == r.outward.zero_rows.end();
    oe << rs[i].id << ',' << flow::format_double(r.outward.error[i]) << ',' << (ok ? "true" : "false") << '\n';
    if (ok) {
      sum += r.outward.error[i];
      ++defined;
    }
  }
  write_text(run.path("outward_error.csv"), oe.str());
  report["outward_error_mean"] = defined == 0 ? json(nullptr) : json(sum / static_cast<double>(defined));
  report["outward_error_regions"] = defined;

  const auto he = metrics::distance_histogram(est, rs, edges);
  const auto ht = metrics::distance_histogram(truth, rs, edges);
  std::ostringstream hs;
  hs << "bin_low_km,bin_high_km,estimate,truth\n";
  for (std::size_t b = 0; b < he.mass.size(); ++b) {
    hs << flow::format_double(edges[b]) << ',' << flow::format_double(edges[b + 1]) << ','
       << flow::format_double(he.mass[b]) << ',' << flow::format_double(ht.mass[b]) << '\n';
  }
  hs << flow::format_double(edges.back()) << ",inf," << flow::format_double(he.overflow) << ','
     << flow::format_double(ht.overflow) << '\n';
  write_text(run.path("distance_histogram.csv"), hs.str());

  std::ostringstream sc;
  std::vector<std::pair<double, double>> pts;
  sc << "home_id,work_id,truth,estimate\n";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t j = 0; j < rs.size(); ++j) {
      if (est(i, j) == 0.0 && truth(i, j) == 0.0) continue;
      sc << rs[i].id << ',' << rs[j].id << ',' << flow::format_double(truth(i, j)) << ','
         << flow::format_double(est(i, j)) << '\n';
      pts.emplace_back(truth(i, j), est(i, j));
    }
  }
  write_text(run.path("scatter.csv"), sc.str());
  if (o.svg) write_text(run.path("scatter.svg"), scatter_svg(pts));

  report["warnings"] = run.warnings;
  write_json(run.path("report.json"), report);
}

// --------------------------------------------------------------- cluster

struct ClusterOptions {
  std::string profiles;
  std::string events;
  std::string regions;
  std::string truth;
  std::size_t k = 2;
  std::uint64_t seed = 1;
  std::size_t replicates = 999;
};

void write_hourly(const fs::path& p, const std::vector<cluster::HourlyDistribution>& d,
                  const std::array<double, cluster::kHours>& mean) {
  std::ostringstream s;
  s << "region_id";
  for (std::size_t h = 0; h < cluster::kHours; ++h) s << ",h" << (h < 10 ? "0" : "") << h;
  s << '\n';
  auto row = [&](const std::string& id, const std::array<double, cluster::kHours>& m) {
    s << id;
    for (double v : m) s << ',' << flow::format_double(v);
    s << '\n';
  };
  for (const auto& x : d) row(x.region_id, x.mass);
  row("mean", mean);
  write_text(p, s.str());
}

void cmd_cluster(const ClusterOptions& o, Run& run) {
  const geo::RegionSet rs = load_regions(run, o.regions);
  run.seed = o.seed;
  if (o.profiles.empty() == o.events.empty()) throw std::invalid_argument("pass exactly one of --profiles or --events");

  ingest::ProfileMap profiles;
  if (!o.profiles.empty()) {
    run.input(o.profiles);
    auto cache = ingest::read_profile_cache_file(o.profiles);
    if (cache.region_ids != rs.ids()) throw std::runtime_error("profile cache was built against a different region set");
    profiles = std::move(cache.profiles);
  } else {
    run.input(o.events);
    std::ifstream in(o.events, std::ios::binary);
    ingest::ProfileBuilder builder(rs);
    const auto [lines, errors] = ingest::for_each_event(in, [&](ingest::EventRecord&& e) { builder.add(e); });
    if (errors > 0) run.warn(std::to_string(errors) + " event lines could not be parsed");
    profiles = builder.take_profiles();
  }

  const auto hd = cluster::hourly_distributions(profiles, rs);
  if (hd.regions.size() < o.k || o.k == 0) {
    throw std::invalid_argument("cannot form " + std::to_string(o.k) + " clusters from " +
                                std::to_string(hd.regions.size()) + " regions with weekday and weekend tweets");
  }
  if (!hd.excluded.empty()) run.warn(std::to_string(hd.excluded.size()) + " regions lack tweets in one day class");
  write_hourly(run.path("hourly_weekday.csv"), hd.weekday, hd.mean_weekday);
  write_hourly(run.path("hourly_weekend.csv"), hd.weekend, hd.mean_weekend);

  std::vector<std::string> ids;
  for (const auto& d : hd.weekday) ids.push_back(d.region_id);
  const auto c = cluster::k_medoids(cluster::emd_matrix(hd.weekday), ids, o.k);

  std::vector<int> labels(rs.size(), -1);
  std::ostringstream cs;
  cs << "region_id,cluster_label,is_medoid\n";
  for (std::size_t q = 0; q < ids.size(); ++q) {
    labels[hd.regions[q]] = c.labels[q];
    const bool medoid = std::find(c.medoids.begin(), c.medoids.end(), q) != c.medoids.end();
    cs << ids[q] << ',' << c.labels[q] << ',' << (medoid ? "true" : "false") << '\n';
  }
  write_text(run.path("clusters.csv"), cs.str());

  json report;
  report["k"] = o.k;
  json medoids = json::array();
  for (auto m : c.medoids) medoids.push_back(ids[m]);
  report["medoids"] = medoids;
  report["cost"] = c.cost;
  report["cost_history"] = c.cost_history;
  std::vector<std::size_t> sizes(o.k, 0);
  for (int l : c.labels) ++sizes[static_cast<std::size_t>(l)];
  report["cluster_sizes"] = sizes;
  report["excluded_regions"] = hd.excluded;

  if (!o.truth.empty()) {
    run.input(o.truth);
    const auto truth = flow::read_od_csv_file(o.truth, rs);
    const auto stats = metrics::inout_ratio_stats(truth, labels);
    report["geometric_mean_inout"] = stats.geometric_mean;
    report["ratio_regions_per_cluster"] = stats.cluster_size;
    std::vector<double> x;
    std::vector<double> y;
    std::ostringstream rsv;
    rsv << "region_id,cluster_label,daytime_evening_ratio,inout_ratio\n";
    for (std::size_t q = 0; q < ids.size(); ++q) {
      const std::size_t r = hd.regions[q];
      if (!stats.ratio[r]) continue;
      double de = 0.0;
      try {
        de = metrics::daytime_evening_ratio(hd.weekday[q].mass);
      } catch (const std::domain_error&) {
        continue;
      }
      x.push_back(de);
      y.push_back(*stats.ratio[r]);
      rsv << ids[q] << ',' << c.labels[q] << ',' << flow::format_double(de) << ',' << flow::format_double(*stats.ratio[r])
          << '\n';
    }
    write_text(run.path("ratios.csv"), rsv.str());
    if (x.size() >= 3) {
      try {
        const auto corr = metrics::correlation_with_permutation(x, y, o.replicates, o.seed);
        report["correlation"] = {{"pearson", corr.pearson},
                                 {"spearman", corr.spearman},
                                 {"p_value", corr.p_value},
                                 {"replicates", corr.replicates},
                                 {"regions", x.size()}};
      } catch (const std::invalid_argument& e) {
        run.warn(std::string("correlation skipped: ") + e.what());
      }
    } else {
      run.warn("fewer than 3 regions have both ratios; correlation skipped");
    }
  }
  report["warnings"] = run.warnings;
  write_json(run.path("cluster_report.json"), report);
}

// ----------------------------------------------------------------- synth

struct SynthOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void cmd_synth(const SynthOptions& o, Run& run) {
  run.input(o.config);
  synth::SynthConfig config = synth::load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  run.seed = config.seed;
  const auto s = synth::synthesize(config);
  write_text(run.path("regions.geojson"), geo::to_geojson(s.world.regions));
  std::ostringstream ev;
  for (const auto& e : s.events) ev << ingest::to_json_line(e) << '\n';
  write_text(run.path("events.jsonl"), ev.str());
  flow::write_od_csv_file(run.path("truth.csv").string(), s.world.truth);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Commuting-flow inference from geotagged events", "commuteflow"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string out_dir;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->option_defaults()->always_capture_default();
    sub->add_option("--out", out_dir, "Output directory")->required();
    return sub;
  };
  std::vector<std::pair<CLI::App*, std::function<void(Run&)>>> commands;

  IngestOptions ing;
  auto* s_ing = add("ingest", "Parse events, build and filter per-user profiles");
  s_ing->add_option("--events", ing.events, "Event JSON Lines file")->required();
  s_ing->add_option("--regions", ing.regions, "Region GeoJSON")->required();
  s_ing->add_option("--min-tweets", ing.min_tweets, "Discard users with fewer located events");
  s_ing->add_option("--min-span-days", ing.min_span_days, "Required span in each of the top two regions");
  commands.emplace_back(s_ing, [&](Run& r) { cmd_ingest(ing, r); });

  InferOptions inf;
  auto* s_inf = add("infer", "Assign home/work and build a flow matrix");
  s_inf->add_option("--profiles", inf.profiles, "Profile cache from ingest")->required();
  s_inf->add_option("--regions", inf.regions, "Region GeoJSON")->required();
  s_inf->add_option("--mode", inf.mode, "hard|temporal-hard|temporal-soft");
  s_inf->add_option("--lambda", inf.lambda, "Single-region threshold");
  s_inf->add_option("--lambda-sweep", inf.lambda_sweep, "start:stop:step, hard mode only");
  s_inf->add_option("--window", inf.window, "workday|restricted");
  s_inf->add_flag("--weekdays-only-work", inf.weekdays_only_work, "Count only Monday-Friday tweets for work");
  commands.emplace_back(s_inf, [&](Run& r) {
    if (!inf.lambda_sweep.empty() && inf.mode != "hard") throw std::invalid_argument("--lambda-sweep requires --mode hard");
    cmd_infer(inf, r);
  });

  RadiationOptions rad;
  auto* s_rad = add("radiation", "Radiation-model flow estimate");
  s_rad->add_option("--regions", rad.regions, "Region GeoJSON")->required();
  s_rad->add_option("--model", rad.model, "standard|one-param");
  s_rad->add_option("--alpha", rad.alpha, "Fixed alpha for the one-parameter model");
  s_rad->add_option("--alpha-from-area", rad.alpha_from_area, "per-region|global:<l km>");
  s_rad->add_option("--truth", rad.truth, "OD CSV supplying commuter totals per origin");
  s_rad->add_option("--commuting", rad.commuting, "all|external, for totals taken from --truth");
  s_rad->add_option("--total-commuters", rad.total_commuters, "Total commuters, split by population");
  commands.emplace_back(s_rad, [&](Run& r) { cmd_radiation(rad, r); });

  EvaluateOptions ev;
  auto* s_ev = add("evaluate", "Score an estimate against a reference matrix");
  s_ev->add_option("--estimate", ev.estimate, "Estimated OD CSV")->required();
  s_ev->add_option("--truth", ev.truth, "Reference OD CSV")->required();
  s_ev->add_option("--regions", ev.regions, "Region GeoJSON")->required();
  s_ev->add_option("--commuting", ev.commuting, "all|external");
  s_ev->add_option("--bins", ev.bins, "Distance bin edges in km: start:stop:step or a comma list");
  s_ev->add_option("--normalize", ev.normalize, "truth|uniform|none");
  s_ev->add_flag("--svg", ev.svg, "Also write a scatter plot");
  commands.emplace_back(s_ev, [&](Run& r) { cmd_evaluate(ev, r); });

  ClusterOptions cl;
  auto* s_cl = add("cluster", "Cluster regions by weekday hourly activity");
  s_cl->add_option("--profiles", cl.profiles, "Profile cache");
  s_cl->add_option("--events", cl.events, "Event JSON Lines file");
  s_cl->add_option("--regions", cl.regions, "Region GeoJSON")->required();
  s_cl->add_option("--truth", cl.truth, "Reference OD CSV for in/out ratios");
  s_cl->add_option("--k", cl.k, "Number of clusters");
  s_cl->add_option("--seed", cl.seed, "Permutation-test seed");
  s_cl->add_option("--replicates", cl.replicates, "Permutation-test replicates");
  commands.emplace_back(s_cl, [&](Run& r) { cmd_cluster(cl, r); });

  SynthOptions sy;
  auto* s_sy = add("synth", "Generate a synthetic world, events and truth");
  s_sy->add_option("--config", sy.config, "Config JSON")->required();
  s_sy->add_option("--seed", sy.seed, "Override the config seed");
  commands.emplace_back(s_sy, [&](Run& r) { cmd_synth(sy, r); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    const auto started = std::chrono::steady_clock::now();
    Run r{out, err, fs::path(out_dir), {}, std::nullopt, {}};
    try {
      fs::create_directories(r.out_dir);
      fn(r);
      json manifest;
      manifest["command"] = sub->get_name();
      manifest["flags"] = flags_of(*sub);
      json inputs = json::object();
      for (const auto& p : r.inputs) inputs[p] = sha256_file(p);
      manifest["inputs"] = inputs;
      manifest["seed"] = r.seed ? json(*r.seed) : json(nullptr);
      manifest["version"] = kVersion;
      manifest["duration_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      write_json(r.path("manifest.json"), manifest);
      if (sub->get_name() == "synth") out << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  return 1;
}

}  // namespace commuteflow::cli
