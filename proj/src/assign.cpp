#include "commuteflow/assign.hpp"

#include <algorithm>
#include <stdexcept>

namespace commuteflow::assign {

TimeWindow TimeWindow::hours(int start, int end, bool weekdays, bool weekends) {
  if (start < 0 || start > 24 || end < 0 || end > 24) throw std::invalid_argument("TimeWindow: hour out of range");
  TimeWindow w;
  for (int h = 0; h < 24; ++h) {
    const bool in = start <= end ? (h >= start && h < end) : (h >= start || h < end);
    if (!in) continue;
    if (weekdays) w.slots_.set(ingest::slot_index(DayClass::weekday, h));
    if (weekends) w.slots_.set(ingest::slot_index(DayClass::weekend, h));
  }
  return w;
}

TimeWindow TimeWindow::all() {
  TimeWindow w;
  w.slots_.set();
  return w;
}

TimeWindow TimeWindow::complement() const {
  TimeWindow w;
  w.slots_ = ~slots_;
  return w;
}

TimeWindow TimeWindow::restricted_to_weekdays() const {
  TimeWindow w = *this;
  for (int h = 0; h < 24; ++h) w.slots_.reset(ingest::slot_index(DayClass::weekend, h));
  return w;
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "hard") return Mode::hard;
  if (s == "temporal-hard" || s == "temporal_hard") return Mode::temporal_hard;
  if (s == "temporal-soft" || s == "temporal_soft") return Mode::temporal_soft;
  return std::nullopt;
}

std::optional<WindowPreset> parse_window_preset(std::string_view s) {
  if (s == "workday") return WindowPreset::workday;
  if (s == "restricted") return WindowPreset::restricted;
  return std::nullopt;
}

void AssignmentPolicy::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (mode != Mode::hard && (home_window.empty() || work_window.empty())) {
    throw std::invalid_argument("temporal policies need non-empty home and work windows");
  }
  if (min_span_days < 0) throw std::invalid_argument("min_span_days must be >= 0");
}

AssignmentPolicy make_policy(Mode mode, WindowPreset preset, bool weekday_only_work) {
  AssignmentPolicy p;
  p.mode = mode;
  p.weekday_only_work = weekday_only_work;
  switch (preset) {
    case WindowPreset::workday:
      p.work_window = TimeWindow::hours(9, 17);
      p.home_window = p.work_window.complement();
      break;
    case WindowPreset::restricted:
      p.work_window = TimeWindow::hours(10, 15);
      p.home_window = TimeWindow::hours(20, 23);
      break;
  }
  if (weekday_only_work) p.work_window = p.work_window.restricted_to_weekdays();
  return p;
}

std::vector<double> SparseDistribution::dense() const {
  std::vector<double> out(dimension, 0.0);
  for (const auto& [i, v] : entries) out[i] = v;
  return out;
}

double SparseDistribution::sum() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second;
  return s;
}

HardAssignment assign_hard(const ingest::UserProfile& profile, double lambda) {
  const auto ranked = ingest::ranked_visits(profile);
  if (ranked.empty()) throw std::invalid_argument("assign_hard: user " + profile.user_id + " has no visits");
  const auto& top = *ranked.front();
  if (ranked.size() == 1) return {profile.user_id, top.region, top.region};
  std::uint64_t total = 0;
  for (const auto* v : ranked) total += v->tweet_count;
  const double share = static_cast<double>(top.tweet_count) / static_cast<double>(total);
  if (share > lambda) return {profile.user_id, top.region, top.region};
  return {profile.user_id, top.region, ranked[1]->region};
}

namespace {

struct WindowCount {
  const std::string* region = nullptr;
  ingest::SlotStats stats;
};

// Per-region window totals; regions whose in-window span is below the minimum
// are reported with a zero count.
std::vector<WindowCount> window_counts(const ingest::UserProfile& profile, const TimeWindow& window,
                                       std::int64_t min_span_days) {
  std::vector<WindowCount> out;
  out.reserve(profile.visits.size());
  const UnixSeconds min_span = min_span_days * kSecondsPerDay;
  for (const auto& [id, v] : profile.visits) {
    WindowCount wc{&id, {}};
    for (std::size_t s = 0; s < ingest::kSlots; ++s) {
      if (window.contains_slot(s)) wc.stats.merge(v.slots[s]);
    }
    if (wc.stats.count > 0 && wc.stats.last - wc.stats.first < min_span) wc.stats.count = 0;
    out.push_back(wc);
  }
  return out;
}

const WindowCount* best(const std::vector<WindowCount>& counts) {
  const WindowCount* top = nullptr;
  for (const auto& c : counts) {
    if (c.stats.count == 0) continue;
    if (top == nullptr || c.stats.count > top->stats.count ||
        (c.stats.count == top->stats.count &&
         (c.stats.first < top->stats.first || (c.stats.first == top->stats.first && *c.region < *top->region)))) {
      top = &c;
    }
  }
  return top;
}

std::optional<SparseDistribution> normalized(const std::vector<WindowCount>& counts, const geo::RegionSet& regions) {
  std::uint64_t total = 0;
  for (const auto& c : counts) total += c.stats.count;
  if (total == 0) return std::nullopt;
  SparseDistribution d;
  d.dimension = regions.size();
  for (const auto& c : counts) {
    if (c.stats.count == 0) continue;
    const auto idx = regions.index_of(*c.region);
    if (!idx) throw std::invalid_argument("assign_soft: region " + *c.region + " is not in the region set");
    d.entries.emplace_back(*idx, static_cast<double>(c.stats.count) / static_cast<double>(total));
  }
  std::sort(d.entries.begin(), d.entries.end());
  return d;
}

}  // namespace

std::optional<HardAssignment> assign_temporal_hard(const ingest::UserProfile& profile, const AssignmentPolicy& policy) {
  policy.validate();
  const auto home_counts = window_counts(profile, policy.home_window, policy.min_span_days);
  const auto work_counts = window_counts(profile, policy.work_window, policy.min_span_days);
  const WindowCount* home = best(home_counts);
  const WindowCount* work = best(work_counts);
  if (home == nullptr || work == nullptr) return std::nullopt;
  return HardAssignment{profile.user_id, *home->region, *work->region};
}

std::optional<SoftAssignment> assign_soft(const ingest::UserProfile& profile, const AssignmentPolicy& policy,
                                          const geo::RegionSet& regions) {
  policy.validate();
  auto home = normalized(window_counts(profile, policy.home_window, policy.min_span_days), regions);
  if (!home) return std::nullopt;
  auto work = normalized(window_counts(profile, policy.work_window, policy.min_span_days), regions);
  if (!work) return std::nullopt;
  return SoftAssignment{profile.user_id, std::move(*home), std::move(*work)};
}

SquareMatrix location_matrix(const SoftAssignment& sa) {
  if (sa.home.dimension != sa.work.dimension) throw std::invalid_argument("location_matrix: dimension mismatch");
  SquareMatrix m(sa.home.dimension);
  for (const auto& [i, hv] : sa.home.entries) {
    for (const auto& [j, wv] : sa.work.entries) m(i, j) = hv * wv;
  }
  return m;
}

}  // namespace commuteflow::assign
