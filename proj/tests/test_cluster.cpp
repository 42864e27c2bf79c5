#include <algorithm>
#include <numeric>
#include <random>

#include "commuteflow/cluster.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace commuteflow;
using namespace commuteflow::cluster;

namespace {

std::array<double, kHours> point_mass(std::size_t h) {
  std::array<double, kHours> a{};
  a[h] = 1.0;
  return a;
}

std::array<double, kHours> random_distribution(std::mt19937_64& gen) {
  std::array<double, kHours> a{};
  std::uniform_real_distribution<double> u(0, 1);
  double s = 0;
  for (auto& v : a) {
    v = gen() % 3 == 0 ? 0.0 : u(gen);
    s += v;
  }
  if (s == 0) return point_mass(gen() % kHours);
  for (auto& v : a) v /= s;
  return a;
}

SquareMatrix dist_of(const std::vector<std::array<double, kHours>>& items) {
  SquareMatrix d(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = 0; j < items.size(); ++j) d(i, j) = emd_1d(items[i], items[j]);
  }
  return d;
}

}  // namespace

TEST_CASE("earth mover's distance") {
  const auto a = point_mass(0);
  CHECK(emd_1d(a, a) == 0.0);
  CHECK(emd_1d(a, point_mass(3)) == 3.0);
  CHECK(emd_1d(a, point_mass(23)) == 23.0);
  std::array<double, kHours> bad{};
  bad[0] = 0.5;
  CHECK_THROWS_AS(emd_1d(a, bad), std::invalid_argument);
  CHECK_THROWS_AS(emd_1d(std::vector<double>{1.0}, std::vector<double>{0.0, 1.0}), std::invalid_argument);

  std::mt19937_64 gen(31);
  for (int k = 0; k < 200; ++k) {
    const auto x = random_distribution(gen);
    const auto y = random_distribution(gen);
    CHECK(emd_1d(x, y) == doctest::Approx(testsupport::transport_emd({x.begin(), x.end()}, {y.begin(), y.end()})).epsilon(1e-9));
  }
}

TEST_CASE("hourly distributions") {
  const auto rs = testsupport::strip(3);
  ingest::ProfileMap profiles;
  auto& p = profiles["u"];
  p.user_id = "u";
  auto& a = p.visits["R0"];
  a.region = "R0";
  a.slots[ingest::slot_index(DayClass::weekday, 12)].count = 4;
  a.slots[ingest::slot_index(DayClass::weekend, 20)].count = 2;
  a.slots[ingest::slot_index(DayClass::weekend, 21)].count = 2;
  auto& b = p.visits["R1"];
  b.region = "R1";
  for (std::size_t s = 0; s < ingest::kSlots; ++s) b.slots[s].count = 3;
  auto& c = p.visits["R2"];
  c.region = "R2";
  c.slots[ingest::slot_index(DayClass::weekday, 3)].count = 1;

  const auto hd = hourly_distributions(profiles, rs);
  CHECK(hd.regions == std::vector<std::size_t>{0, 1});
  CHECK(hd.excluded == std::vector<std::string>{"R2"});
  CHECK(hd.weekday[0].mass == point_mass(12));
  CHECK(hd.weekend[0].mass[20] == 0.5);
  CHECK(hd.weekend[0].counts[21] == 2);
  for (double v : hd.weekday[1].mass) CHECK(v == 1.0 / 24);
  CHECK(hd.mean_weekday[12] == doctest::Approx(0.5 + 0.5 / 24));
  double total = 0;
  for (double v : hd.mean_weekend) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("k-medoids on two bundles") {
  std::vector<std::array<double, kHours>> items;
  std::vector<std::string> ids;
  std::mt19937_64 gen(12);
  for (int k = 0; k < 10; ++k) {
    std::array<double, kHours> a{};
    const std::size_t peak = k % 2 == 0 ? 11 : 21;
    a[peak] = 0.8 + 0.01 * static_cast<double>(gen() % 10);
    a[peak + 1] = 1.0 - a[peak];
    items.push_back(a);
    ids.push_back("Z" + std::to_string(k));
  }
  const auto d = dist_of(items);
  const auto c = k_medoids(d, ids, 2);
  for (std::size_t i = 0; i < items.size(); ++i) CHECK((c.labels[i] == c.labels[i % 2]));
  CHECK(c.labels[0] != c.labels[1]);
  for (std::size_t m = 0; m < c.medoids.size(); ++m) CHECK(c.labels[c.medoids[m]] == static_cast<int>(m));
  for (std::size_t k = 1; k < c.cost_history.size(); ++k) CHECK(c.cost_history[k] <= c.cost_history[k - 1]);
  CHECK(c.cost == doctest::Approx(testsupport::exhaustive_medoid_cost(d, 2)));

  const auto all = k_medoids(d, ids, items.size());
  CHECK(all.cost == 0.0);
  CHECK_THROWS_AS(k_medoids(d, ids, 11), std::invalid_argument);
  CHECK_THROWS_AS(k_medoids(d, ids, 0), std::invalid_argument);
}

TEST_CASE("k-medoids is invariant to input order") {
  std::mt19937_64 gen(44);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::array<double, kHours>> items;
    std::vector<std::string> ids;
    for (int k = 0; k < 9; ++k) {
      items.push_back(random_distribution(gen));
      ids.push_back("I" + std::to_string(k));
    }
    const auto base = k_medoids(dist_of(items), ids, 3);
    std::vector<std::size_t> perm(items.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<std::array<double, kHours>> pi;
    std::vector<std::string> pids;
    for (auto p : perm) {
      pi.push_back(items[p]);
      pids.push_back(ids[p]);
    }
    const auto shuffled = k_medoids(dist_of(pi), pids, 3);
    CHECK(shuffled.cost == base.cost);
    for (std::size_t q = 0; q < perm.size(); ++q) CHECK(shuffled.labels[q] == base.labels[perm[q]]);
  }
}
