#include "commuteflow/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace commuteflow::cluster {

HourlyDistributions hourly_distributions(const ingest::ProfileMap& profiles, const geo::RegionSet& rs) {
  std::vector<std::array<std::uint64_t, 2 * kHours>> counts(rs.size());
  for (auto& c : counts) c.fill(0);
  for (const auto& [user, p] : profiles) {
    for (const auto& [id, v] : p.visits) {
      const auto idx = rs.index_of(id);
      if (!idx) throw std::invalid_argument("hourly_distributions: unknown region " + id);
      for (std::size_t s = 0; s < ingest::kSlots; ++s) counts[*idx][s] += v.slots[s].count;
    }
  }

  HourlyDistributions out;
  for (std::size_t r = 0; r < rs.size(); ++r) {
    std::array<std::uint64_t, 2> totals{0, 0};
    for (std::size_t h = 0; h < kHours; ++h) {
      totals[0] += counts[r][h];
      totals[1] += counts[r][kHours + h];
    }
    if (totals[0] == 0 || totals[1] == 0) {
      out.excluded.push_back(rs[r].id);
      continue;
    }
    out.regions.push_back(r);
    for (int d = 0; d < 2; ++d) {
      HourlyDistribution hd;
      hd.region_id = rs[r].id;
      hd.day_class = static_cast<DayClass>(d);
      for (std::size_t h = 0; h < kHours; ++h) {
        hd.counts[h] = counts[r][static_cast<std::size_t>(d) * kHours + h];
        hd.mass[h] = static_cast<double>(hd.counts[h]) / static_cast<double>(totals[static_cast<std::size_t>(d)]);
      }
      (d == 0 ? out.weekday : out.weekend).push_back(std::move(hd));
    }
  }

  if (!out.regions.empty()) {
    const double n = static_cast<double>(out.regions.size());
    for (std::size_t k = 0; k < out.regions.size(); ++k) {
      for (std::size_t h = 0; h < kHours; ++h) {
        out.mean_weekday[h] += out.weekday[k].mass[h] / n;
        out.mean_weekend[h] += out.weekend[k].mass[h] / n;
      }
    }
  }
  return out;
}

namespace {

void require_distribution(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) {
    if (!(v >= 0.0)) throw std::invalid_argument("emd_1d: negative or NaN mass");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("emd_1d: distribution is not normalized");
}

}  // namespace

double emd_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("emd_1d: length mismatch");
  require_distribution(a);
  require_distribution(b);
  double cdf_gap = 0.0;
  double cost = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    cdf_gap += a[h] - b[h];
    cost += std::abs(cdf_gap);
  }
  return cost;
}

SquareMatrix emd_matrix(std::span<const HourlyDistribution> items) {
  SquareMatrix d(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double v = emd_1d(items[i].mass, items[j].mass);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace {

// Works on items in id order; medoid lists are kept sorted ascending so the
// lowest position wins every tie.
class Pam {
 public:
  Pam(const SquareMatrix& d, std::vector<std::size_t> order) : d_(d), order_(std::move(order)), n_(order_.size()) {}

  double dist(std::size_t a, std::size_t b) const { return d_(order_[a], order_[b]); }

  std::vector<std::size_t> initialize(std::size_t k) const {
    std::vector<std::size_t> medoids;
    std::size_t central = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += dist(i, j);
      if (s < best) {
        best = s;
        central = i;
      }
    }
    medoids.push_back(central);
    std::vector<double> nearest(n_);
    for (std::size_t i = 0; i < n_; ++i) nearest[i] = dist(i, central);
    while (medoids.size() < k) {
      std::size_t far = n_;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (std::find(medoids.begin(), medoids.end(), i) != medoids.end()) continue;
        if (nearest[i] > far_d) {
          far_d = nearest[i];
          far = i;
        }
      }
      medoids.push_back(far);
      for (std::size_t i = 0; i < n_; ++i) nearest[i] = std::min(nearest[i], dist(i, far));
    }
    std::sort(medoids.begin(), medoids.end());
    return medoids;
  }

  // Nearest medoid per item (label = index into medoids) and the total cost.
  double assign(const std::vector<std::size_t>& medoids, std::vector<int>& labels) const {
    labels.assign(n_, 0);
    double cost = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto own = std::find(medoids.begin(), medoids.end(), i);
      if (own != medoids.end()) {
        labels[i] = static_cast<int>(own - medoids.begin());
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < medoids.size(); ++m) {
        const double v = dist(i, medoids[m]);
        if (v < best) {
          best = v;
          labels[i] = static_cast<int>(m);
        }
      }
      cost += best;
    }
    return cost;
  }

  double cost_of(const std::vector<std::size_t>& medoids) const {
    std::vector<int> labels;
    return assign(medoids, labels);
  }

  // Replace each medoid by the member minimizing in-cluster distance.
  std::vector<std::size_t> update(const std::vector<std::size_t>& medoids, const std::vector<int>& labels) const {
    std::vector<std::size_t> next = medoids;
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      double best = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (labels[j] == static_cast<int>(m)) best += dist(medoids[m], j);
      }
      for (std::size_t i = 0; i < n_; ++i) {
        if (labels[i] != static_cast<int>(m) || i == medoids[m]) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
          if (labels[j] == static_cast<int>(m)) s += dist(i, j);
        }
        if (s < best) {
          best = s;
          next[m] = i;
        }
      }
    }
    std::sort(next.begin(), next.end());
    return next;
  }

  // Best single medoid/non-medoid exchange; returns false if none improves.
  bool swap(std::vector<std::size_t>& medoids, double& cost) const {
    double best_cost = cost;
    std::vector<std::size_t> best;
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      for (std::size_t o = 0; o < n_; ++o) {
        if (std::find(medoids.begin(), medoids.end(), o) != medoids.end()) continue;
        std::vector<std::size_t> trial = medoids;
        trial[m] = o;
        std::sort(trial.begin(), trial.end());
        const double c = cost_of(trial);
        if (c < best_cost) {
          best_cost = c;
          best = std::move(trial);
        }
      }
    }
    if (best.empty()) return false;
    medoids = std::move(best);
    cost = best_cost;
    return true;
  }

 private:
  const SquareMatrix& d_;
  std::vector<std::size_t> order_;
  std::size_t n_;
};

}  // namespace

Clustering k_medoids(const SquareMatrix& distances, std::span<const std::string> ids, std::size_t k,
                     std::size_t max_iter) {
  const std::size_t n = ids.size();
  if (distances.size() != n) throw std::invalid_argument("k_medoids: distance matrix does not match item count");
  if (k == 0 || k > n) throw std::invalid_argument("k_medoids: need 1 <= k <= item count");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  for (std::size_t i = 1; i < n; ++i) {
    if (ids[order[i]] == ids[order[i - 1]]) throw std::invalid_argument("k_medoids: duplicate item id " + ids[order[i]]);
  }

  const Pam pam(distances, order);
  std::vector<std::size_t> medoids = pam.initialize(k);
  std::vector<int> labels;
  double cost = pam.assign(medoids, labels);

  Clustering result;
  result.k = k;
  result.cost_history.push_back(cost);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    auto next = pam.update(medoids, labels);
    std::vector<int> next_labels;
    double next_cost = pam.assign(next, next_labels);
    if (next_cost < cost) {
      medoids = std::move(next);
      labels = std::move(next_labels);
      cost = next_cost;
    } else if (pam.swap(medoids, cost)) {
      pam.assign(medoids, labels);
    } else {
      break;
    }
    result.cost_history.push_back(cost);
  }

  result.cost = cost;
  result.labels.assign(n, 0);
  for (std::size_t c = 0; c < n; ++c) result.labels[order[c]] = labels[c];
  for (std::size_t m : medoids) result.medoids.push_back(order[m]);
  return result;
}

}  // namespace commuteflow::cluster
