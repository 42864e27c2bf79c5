#include <random>

#include "commuteflow/assign.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace commuteflow;
using namespace commuteflow::assign;

namespace {

constexpr UnixSeconds kMonday = 1433116800;  // 2015-06-01, local midnight is 23:00 UTC the day before

// UTC instant for a local hour on day `d` after 2015-06-01.
UnixSeconds local(int d, int hour) { return uk_local_to_utc(kMonday + d * kSecondsPerDay + hour * 3600 + 60); }

struct Builder {
  ingest::UserProfile p;
  explicit Builder(std::string id) { p.user_id = std::move(id); }
  Builder& add(const std::string& region, UnixSeconds t, int times = 1) {
    auto& v = p.visits[region];
    v.region = region;
    for (int k = 0; k < times; ++k) v.add(t);
    p.total_assigned += static_cast<std::uint64_t>(times);
    return *this;
  }
  // `n` tweets spread over 60 days at the given local hour, weekdays or Saturdays.
  Builder& spread(const std::string& region, int n, int hour, bool weekend = false) {
    for (int k = 0; k < n; ++k) {
      const int week = k * 9 / std::max(1, n - 1);
      add(region, local(7 * week + (weekend ? 5 : k % 5), hour));
    }
    return *this;
  }
};

}  // namespace

TEST_CASE("time windows") {
  const auto w = TimeWindow::hours(9, 17);
  CHECK(w.contains(DayClass::weekday, 9));
  CHECK(w.contains(DayClass::weekend, 16));
  CHECK_FALSE(w.contains(DayClass::weekday, 17));
  CHECK(w.complement().contains(DayClass::weekday, 17));
  const auto night = TimeWindow::hours(22, 2);
  CHECK(night.contains(DayClass::weekday, 23));
  CHECK(night.contains(DayClass::weekday, 1));
  CHECK_FALSE(night.contains(DayClass::weekday, 2));
  CHECK_FALSE(w.restricted_to_weekdays().contains(DayClass::weekend, 10));

  const auto r = make_policy(Mode::temporal_hard, WindowPreset::restricted, true);
  CHECK(r.work_window == TimeWindow::hours(10, 15, true, false));
  CHECK(r.home_window == TimeWindow::hours(20, 23));
  const auto d = make_policy(Mode::temporal_hard, WindowPreset::workday, false);
  CHECK(d.home_window == TimeWindow::hours(17, 9));
  CHECK(parse_mode("temporal-soft") == Mode::temporal_soft);
  CHECK_FALSE(parse_mode("soft"));
}

TEST_CASE("hard assignment rule") {
  CHECK(assign_hard(Builder("a").add("A", local(0, 12), 19).add("B", local(1, 12)).p, 0.9) ==
        HardAssignment{"a", "A", "A"});
  CHECK(assign_hard(Builder("b").add("A", local(0, 12), 8).add("B", local(1, 12), 2).p, 0.9) ==
        HardAssignment{"b", "A", "B"});
  // Count tie: earlier first_seen wins, regardless of id order.
  CHECK(assign_hard(Builder("c").add("B", local(3, 12), 5).add("A", local(1, 12), 5).p, 0.7) ==
        HardAssignment{"c", "A", "B"});
  CHECK(assign_hard(Builder("c").add("A", local(3, 12), 5).add("B", local(1, 12), 5).p, 0.7) ==
        HardAssignment{"c", "B", "A"});
  // Full tie falls back to the id.
  CHECK(assign_hard(Builder("d").add("Z", local(1, 12), 5).add("Y", local(1, 12), 5).p, 0.7).home == "Y");
  // Exactly at λ is not "more than".
  CHECK(assign_hard(Builder("e").add("A", local(0, 12), 9).add("B", local(1, 12)).p, 0.9).work == "B");
  CHECK(assign_hard(Builder("f").add("A", local(0, 12), 3).p, 1.0).work == "A");
  CHECK_THROWS_AS(assign_hard(Builder("g").p, 0.9), std::invalid_argument);
}

TEST_CASE("hard assignment properties") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    Builder b("u");
    Builder scaled("u");
    const int regions = 1 + static_cast<int>(gen() % 4);
    const int factor = 1 + static_cast<int>(gen() % 5);
    for (int r = 0; r < regions; ++r) {
      const int n = 1 + static_cast<int>(gen() % 10);
      const auto t = local(static_cast<int>(gen() % 50), 12);
      b.add("R" + std::to_string(r), t, n);
      scaled.add("R" + std::to_string(r), t, n * factor);
    }
    const double lambda = static_cast<double>(gen() % 101) / 100.0;
    CHECK(assign_hard(b.p, lambda) == assign_hard(scaled.p, lambda));
    const auto one = assign_hard(b.p, 1.0);
    CHECK((one.home != one.work || b.p.visits.size() == 1));
  }
}

TEST_CASE("temporal hard assignment") {
  const auto restricted = make_policy(Mode::temporal_hard, WindowPreset::restricted, true);
  const auto split = Builder("u").spread("A", 10, 21).spread("B", 10, 11).p;
  CHECK(assign_temporal_hard(split, restricted) == HardAssignment{"u", "A", "B"});

  const auto weekend_only = Builder("w").spread("A", 10, 21, true).spread("B", 10, 11, true).p;
  CHECK_FALSE(assign_temporal_hard(weekend_only, restricted));

  const auto single = Builder("s").spread("A", 10, 21).spread("A", 10, 11).p;
  CHECK(assign_temporal_hard(single, restricted) == HardAssignment{"s", "A", "A"});

  // A region whose in-window tweets span under 30 days is ignored.
  auto burst = Builder("b").spread("A", 10, 21);
  for (int k = 0; k < 20; ++k) burst.add("C", local(k % 5, 11));
  burst.spread("B", 4, 11);
  CHECK(assign_temporal_hard(burst.p, restricted) == HardAssignment{"b", "A", "B"});

  // All-hours windows reproduce the hard rule's top choice.
  AssignmentPolicy everything;
  everything.mode = Mode::temporal_hard;
  const auto mixed = Builder("m").spread("A", 12, 8).spread("B", 6, 14).p;
  const auto t = assign_temporal_hard(mixed, everything);
  REQUIRE(t);
  CHECK(t->home == assign_hard(mixed, 0.9).home);
}

TEST_CASE("soft assignment") {
  const auto rs = testsupport::strip(4);
  const auto policy = make_policy(Mode::temporal_soft, WindowPreset::restricted, false);
  const auto same = Builder("a").spread("R0", 6, 21).spread("R0", 6, 11).p;
  const auto sa = assign_soft(same, policy, rs);
  REQUIRE(sa);
  CHECK(sa->home.dense() == std::vector<double>{1, 0, 0, 0});
  CHECK(sa->work.dense() == std::vector<double>{1, 0, 0, 0});
  const auto l = location_matrix(*sa);
  CHECK(l(0, 0) == 1.0);
  CHECK(l.total() == 1.0);

  const auto mixed = Builder("b").spread("R0", 9, 21).spread("R1", 3, 21).spread("R2", 4, 11).spread("R3", 4, 11).p;
  const auto sb = assign_soft(mixed, policy, rs);
  REQUIRE(sb);
  CHECK(sb->home.dense() == std::vector<double>{0.75, 0.25, 0, 0});
  CHECK(sb->work.dense() == std::vector<double>{0, 0, 0.5, 0.5});
  const auto m = location_matrix(*sb);
  CHECK(m.total() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0;
    double col = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      row += m(i, j);
      col += m(j, i);
    }
    CHECK(std::abs(row - sb->home.dense()[i]) < 1e-12);
    CHECK(std::abs(col - sb->work.dense()[i]) < 1e-12);
  }

  const auto no_home = Builder("c").spread("R0", 6, 11).p;
  CHECK_FALSE(assign_soft(no_home, policy, rs));

  SoftAssignment manual{"d", {{{0, 0.5}, {1, 0.5}}, 2}, {{{0, 1.0}}, 2}};
  const auto lm = location_matrix(manual);
  CHECK(lm(0, 0) == 0.5);
  CHECK(lm(1, 0) == 0.5);
  CHECK(lm(0, 1) == 0.0);
}

TEST_CASE("policy validation") {
  AssignmentPolicy p;
  p.lambda = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  AssignmentPolicy q;
  q.mode = Mode::temporal_hard;
  q.work_window = TimeWindow{};
  CHECK_THROWS_AS(assign_temporal_hard(ingest::UserProfile{}, q), std::invalid_argument);
}
