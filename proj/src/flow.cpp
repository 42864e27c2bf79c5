#include "commuteflow/flow.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace commuteflow::flow {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::twitter_hard: return "twitter-hard";
    case Provenance::twitter_soft: return "twitter-soft";
    case Provenance::radiation_std: return "radiation-std";
    case Provenance::radiation_1p: return "radiation-1p";
    case Provenance::census: return "census";
    case Provenance::synthetic_truth: return "synthetic-truth";
  }
  return "census";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  for (auto p : {Provenance::twitter_hard, Provenance::twitter_soft, Provenance::radiation_std,
                 Provenance::radiation_1p, Provenance::census, Provenance::synthetic_truth}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<Commuting> parse_commuting(std::string_view s) {
  if (s == "all") return Commuting::all;
  if (s == "external") return Commuting::external;
  return std::nullopt;
}

std::string_view to_string(Commuting c) { return c == Commuting::all ? "all" : "external"; }

void FlowMatrix::check() const {
  if (values.size() != region_ids.size()) throw std::invalid_argument("flow matrix dimension does not match its index");
  for (double v : values.values()) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("flow matrix has a negative or non-finite entry");
  }
  if (!diagonal_meaningful) {
    for (std::size_t i = 0; i < size(); ++i) {
      if (values(i, i) != 0.0) throw std::invalid_argument("flow matrix diagonal must be zero");
    }
  }
}

CommuterMarginals CommuterMarginals::from_counts(std::vector<double> c, std::vector<double> n) {
  CommuterMarginals m;
  for (double v : c) {
    if (!(v >= 0.0)) throw std::invalid_argument("commuter totals must be non-negative");
    m.C += v;
  }
  for (double v : n) m.N += v;
  m.c = std::move(c);
  m.n = std::move(n);
  return m;
}

CommuterMarginals CommuterMarginals::uniform(double total_commuters, std::vector<double> n) {
  if (!(total_commuters >= 0.0)) throw std::invalid_argument("total commuters must be non-negative");
  CommuterMarginals m;
  for (double v : n) m.N += v;
  if (m.N <= 0.0) throw std::invalid_argument("total population must be positive");
  m.C = total_commuters;
  m.c.reserve(n.size());
  for (double v : n) m.c.push_back(total_commuters * v / m.N);
  m.n = std::move(n);
  return m;
}

CommuterMarginals CommuterMarginals::from_flows(const FlowMatrix& m, Commuting mode, std::vector<double> n) {
  std::vector<double> c(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (mode == Commuting::external && i == j) continue;
      c[i] += m(i, j);
    }
  }
  return from_counts(std::move(c), std::move(n));
}

std::vector<double> populations(const geo::RegionSet& rs) {
  std::vector<double> n;
  n.reserve(rs.size());
  for (const auto& r : rs.regions()) n.push_back(static_cast<double>(r.population));
  return n;
}

namespace {

std::size_t require_index(const geo::RegionSet& rs, const std::string& id) {
  const auto idx = rs.index_of(id);
  if (!idx) throw std::invalid_argument("unknown region id " + id);
  return *idx;
}

}  // namespace

FlowMatrix flows_from_hard(std::span<const assign::HardAssignment> assignments, const geo::RegionSet& rs) {
  FlowMatrix m(rs.ids(), Provenance::twitter_hard, true);
  for (const auto& a : assignments) {
    m.values(require_index(rs, a.home), require_index(rs, a.work)) += 1.0;
  }
  return m;
}

FlowMatrix flows_from_soft(std::span<const assign::SoftAssignment> assignments, const geo::RegionSet& rs) {
  if (assignments.empty()) throw std::invalid_argument("flows_from_soft: no users");
  FlowMatrix m(rs.ids(), Provenance::twitter_soft, true);
  for (const auto& sa : assignments) {
    if (sa.home.dimension != rs.size() || sa.work.dimension != rs.size()) {
      throw std::invalid_argument("flows_from_soft: assignment dimension does not match region set");
    }
    for (const auto& [i, h] : sa.home.entries) {
      for (const auto& [j, w] : sa.work.entries) m.values(i, j) += h * w;
    }
  }
  const double users = static_cast<double>(assignments.size());
  for (double& v : m.values.values()) v /= users;
  return m;
}

NormalizeResult normalize_rows(const FlowMatrix& m, const CommuterMarginals& marginals, Commuting mode) {
  if (marginals.c.size() != m.size()) throw std::invalid_argument("normalize_rows: marginals do not cover every region");
  for (double c : marginals.c) {
    if (!(c >= 0.0)) throw std::invalid_argument("normalize_rows: negative commuter total");
  }
  NormalizeResult out{mode == Commuting::external ? zero_diagonal(m) : m, {}};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double s = out.flows.values.row_sum(i);
    if (s <= 0.0) {
      out.zero_rows.push_back(i);
      continue;
    }
    const double scale = marginals.c[i] / s;
    for (double& v : out.flows.values.row(i)) v *= scale;
  }
  return out;
}

FlowMatrix zero_diagonal(const FlowMatrix& m) {
  FlowMatrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out.values(i, i) = 0.0;
  out.diagonal_meaningful = false;
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_od_csv(std::ostream& out, const FlowMatrix& m) {
  out << "#provenance=" << to_string(m.provenance) << ",diagonal=" << (m.diagonal_meaningful ? "true" : "false")
      << '\n';
  out << "home_id,work_id,value\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double v = m(i, j);
      if (v != 0.0) out << m.region_ids[i] << ',' << m.region_ids[j] << ',' << format_double(v) << '\n';
    }
  }
}

void write_od_csv_file(const std::string& path, const FlowMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_od_csv(out, m);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

FlowMatrix read_od_csv(std::istream& in, const geo::RegionSet& rs) {
  FlowMatrix m(rs.ids(), Provenance::census, true);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (const auto& kv : split_csv(line.substr(1))) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "provenance") {
          const auto p = parse_provenance(val);
          if (!p) throw std::invalid_argument("OD CSV: unknown provenance '" + val + "'");
          m.provenance = *p;
        } else if (key == "diagonal") {
          m.diagonal_meaningful = val != "false";
        }
      }
      continue;
    }
    if (line == "home_id,work_id,value") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw std::invalid_argument("OD CSV line " + std::to_string(lineno) + ": expected 3 fields");
    const auto i = rs.index_of(fields[0]);
    const auto j = rs.index_of(fields[1]);
    if (!i || !j) {
      throw std::invalid_argument("OD CSV line " + std::to_string(lineno) + ": unknown region id " +
                                  (!i ? fields[0] : fields[1]));
    }
    double v = 0.0;
    const auto& s = fields[2];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw std::invalid_argument("OD CSV line " + std::to_string(lineno) + ": bad value '" + s + "'");
    }
    if (!seen.emplace(*i, *j).second) {
      throw std::invalid_argument("OD CSV line " + std::to_string(lineno) + ": duplicate pair");
    }
    m.values(*i, *j) = v;
  }
  m.check();
  return m;
}

FlowMatrix read_od_csv_file(const std::string& path, const geo::RegionSet& rs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_od_csv(in, rs);
}

}  // namespace commuteflow::flow
