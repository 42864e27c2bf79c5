#include "commuteflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "commuteflow/random.hpp"

namespace commuteflow::metrics {

namespace {

// Neumaier compensated summation.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_same_shape(const flow::FlowMatrix& a, const flow::FlowMatrix& b) {
  if (a.size() != b.size() || a.values.size() != b.values.size()) {
    throw std::invalid_argument("matrices have different dimensions");
  }
  if (a.region_ids != b.region_ids) throw std::invalid_argument("matrices use different region indexes");
}

}  // namespace

CpcForms cpc_forms(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cpc: dimension mismatch");
  Accumulator common;
  Accumulator total;
  Accumulator total_a;
  Accumulator total_b;
  Accumulator abs_error;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k) {
    common.add(std::min(va[k], vb[k]));
    total.add(va[k]);
    total.add(vb[k]);
    total_a.add(va[k]);
    total_b.add(vb[k]);
    abs_error.add(std::abs(va[k] - vb[k]));
  }
  CpcForms f;
  f.common = common.value();
  f.total = total.value();
  f.abs_error = abs_error.value();
  if (!(total_a.value() > 0.0)) throw std::invalid_argument("cpc: first matrix has zero mass");
  if (!(total_b.value() > 0.0)) throw std::invalid_argument("cpc: second matrix has zero mass");
  f.cpc = 2.0 * f.common / f.total;
  f.cpc_alt = 1.0 - f.abs_error / f.total;
  return f;
}

OutwardError outward_error(const flow::FlowMatrix& a, const flow::FlowMatrix& b) {
  require_same_shape(a, b);
  OutwardError out;
  out.error.assign(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sa = a.values.row_sum(i);
    const double sb = b.values.row_sum(i);
    if (!(sa > 0.0) || !(sb > 0.0)) {
      out.zero_rows.push_back(i);
      continue;
    }
    Accumulator e;
    for (std::size_t j = 0; j < a.size(); ++j) e.add(std::abs(a(i, j) / sa - b(i, j) / sb));
    out.error[i] = e.value();
  }
  return out;
}

CpcReport cpc(const flow::FlowMatrix& estimate, const flow::FlowMatrix& reference) {
  require_same_shape(estimate, reference);
  if (estimate.diagonal_meaningful != reference.diagonal_meaningful) {
    throw std::invalid_argument("cpc: matrices disagree on whether the diagonal is meaningful");
  }
  const CpcForms f = cpc_forms(estimate.values, reference.values);
  if (std::abs(f.cpc - f.cpc_alt) > kCpcFormTolerance) {
    throw std::logic_error("cpc: min form and absolute-error form disagree");
  }
  CpcReport r;
  r.cpc = f.cpc;
  r.cpc_alt = f.cpc_alt;
  r.mode = estimate.diagonal_meaningful ? flow::Commuting::all : flow::Commuting::external;
  r.numerator = 2.0 * f.common;
  r.denominator = f.total;
  r.outward = outward_error(estimate, reference);
  return r;
}

DistanceHistogram distance_histogram(const flow::FlowMatrix& m, const SquareMatrix& distances_km,
                                     std::span<const double> edges) {
  if (edges.size() < 2 || edges.front() != 0.0) {
    throw std::invalid_argument("histogram edges must start at 0 and define at least one bin");
  }
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k] > edges[k - 1])) throw std::invalid_argument("histogram edges must be strictly increasing");
  }
  if (distances_km.size() != m.size()) throw std::invalid_argument("histogram: distance matrix dimension mismatch");
  DistanceHistogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.mass.assign(edges.size() - 1, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double v = m(i, j);
      if (v == 0.0) continue;
      const double d = distances_km(i, j);
      h.total += v;
      const auto it = std::upper_bound(edges.begin(), edges.end(), d);
      if (it == edges.end()) {
        h.overflow += v;
      } else {
        const auto bin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - edges.begin() - 1));
        h.mass[bin] += v;
      }
    }
  }
  return h;
}

DistanceHistogram distance_histogram(const flow::FlowMatrix& m, const geo::RegionSet& rs,
                                     std::span<const double> edges) {
  SquareMatrix d(rs.size());
  const auto flat = geo::centroid_distances(rs);
  std::copy(flat.begin(), flat.end(), d.values().begin());
  return distance_histogram(m, d, edges);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t r = 0;
  while (r < order.size()) {
    std::size_t end = r;
    while (end < order.size() && x[order[end]] == x[order[r]]) ++end;
    const double avg = (static_cast<double>(r + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t q = r; q < end; ++q) ranks[order[q]] = avg;
    r = end;
  }
  return ranks;
}

namespace {

struct Centered {
  std::vector<double> values;
  double ss = 0.0;
};

Centered center(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  Centered c;
  c.values.reserve(x.size());
  for (double v : x) {
    c.values.push_back(v - mean);
    c.ss += (v - mean) * (v - mean);
  }
  return c;
}

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation: vectors differ in length");
  if (x.size() < 3) throw std::invalid_argument("correlation: need at least 3 pairs");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const Centered cx = center(x);
  const Centered cy = center(y);
  if (cx.ss == 0.0 || cy.ss == 0.0) throw std::invalid_argument("correlation undefined for a constant vector");
  return std::clamp(dot(cx.values, cy.values) / std::sqrt(cx.ss * cy.ss), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

CorrelationReport correlation_with_permutation(std::span<const double> x, std::span<const double> y,
                                               std::size_t replicates, std::uint64_t seed) {
  CorrelationReport r;
  r.pearson = pearson(x, y);
  const Centered rx = center(average_ranks(x));
  Centered ry = center(average_ranks(y));
  const double denom = std::sqrt(rx.ss * ry.ss);
  r.spearman = std::clamp(dot(rx.values, ry.values) / denom, -1.0, 1.0);
  r.replicates = replicates;

  const double observed = std::abs(r.spearman);
  Rng rng(seed);
  std::size_t extreme = 0;
  std::vector<double> perm = ry.values;
  for (std::size_t k = 0; k < replicates; ++k) {
    rng.shuffle(std::span<double>(perm));
    const double rho = dot(rx.values, perm) / denom;
    if (std::abs(rho) >= observed - 1e-12) ++extreme;
  }
  r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + replicates);
  return r;
}

InOutRatioStats inout_ratio_stats(const flow::FlowMatrix& reference, std::span<const int> labels) {
  const std::size_t k = reference.size();
  if (labels.size() != k) throw std::invalid_argument("inout_ratio_stats: one label per region required");
  InOutRatioStats s;
  s.inward.assign(k, 0.0);
  s.outward.assign(k, 0.0);
  s.ratio.assign(k, std::nullopt);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      s.outward[i] += reference(i, j);
      s.inward[j] += reference(i, j);
    }
  }
  int clusters = 0;
  for (int l : labels) {
    clusters = std::max(clusters, l + 1);
  }
  std::vector<double> log_sum(static_cast<std::size_t>(clusters), 0.0);
  s.cluster_size.assign(static_cast<std::size_t>(clusters), 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (labels[i] < 0 || !(s.inward[i] > 0.0) || !(s.outward[i] > 0.0)) {
      s.excluded.push_back(i);
      continue;
    }
    const double ratio = s.inward[i] / s.outward[i];
    s.ratio[i] = ratio;
    const auto c = static_cast<std::size_t>(labels[i]);
    log_sum[c] += std::log(ratio);
    ++s.cluster_size[c];
  }
  s.geometric_mean.resize(static_cast<std::size_t>(clusters));
  for (std::size_t c = 0; c < log_sum.size(); ++c) {
    if (s.cluster_size[c] == 0) throw std::invalid_argument("inout_ratio_stats: cluster " + std::to_string(c) + " is empty");
    s.geometric_mean[c] = std::exp(log_sum[c] / static_cast<double>(s.cluster_size[c]));
  }
  return s;
}

double daytime_evening_ratio(std::span<const double, 24> hourly) {
  double day = 0.0;
  double evening = 0.0;
  for (int h = 10; h < 15; ++h) day += hourly[h];
  for (int h = 20; h < 23; ++h) evening += hourly[h];
  if (!(evening > 0.0)) throw std::domain_error("daytime_evening_ratio: no evening activity");
  return (day / 5.0) / (evening / 3.0);
}

}  // namespace commuteflow::metrics
