#pragma once

#include <bitset>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "commuteflow/ingest.hpp"
#include "commuteflow/matrix.hpp"

namespace commuteflow::assign {

/// A set of (day class, local hour) slots.
class TimeWindow {
 public:
  TimeWindow() = default;

  /// Hours in [start, end) on the selected day classes. start > end wraps past midnight.
  static TimeWindow hours(int start, int end, bool weekdays = true, bool weekends = true);
  static TimeWindow all();

  TimeWindow complement() const;
  TimeWindow restricted_to_weekdays() const;

  bool contains(DayClass d, int hour) const { return slots_.test(ingest::slot_index(d, hour)); }
  bool contains_slot(std::size_t slot) const { return slots_.test(slot); }
  bool empty() const { return slots_.none(); }
  bool operator==(const TimeWindow&) const = default;

 private:
  std::bitset<ingest::kSlots> slots_;
};

enum class Mode { hard, temporal_hard, temporal_soft };
enum class WindowPreset { workday, restricted };

std::optional<Mode> parse_mode(std::string_view s);
std::optional<WindowPreset> parse_window_preset(std::string_view s);

struct AssignmentPolicy {
  Mode mode = Mode::hard;
  double lambda = 0.9;
  TimeWindow home_window = TimeWindow::all();
  TimeWindow work_window = TimeWindow::all();
  bool weekday_only_work = false;
  std::int64_t min_span_days = 30;

  /// Throws std::invalid_argument when lambda is outside [0,1] or a temporal
  /// mode has an empty window.
  void validate() const;
};

/// workday: work 09:00-17:00, home the remaining hours.
/// restricted: work 10:00-15:00, home 20:00-23:00.
/// The Monday-Friday restriction, when set, narrows the work window only.
AssignmentPolicy make_policy(Mode mode, WindowPreset preset, bool weekday_only_work);

struct HardAssignment {
  std::string user_id;
  std::string home;
  std::string work;

  bool operator==(const HardAssignment&) const = default;
};

/// Sparse probability vector over region positions 0..dimension-1.
struct SparseDistribution {
  std::vector<std::pair<std::size_t, double>> entries;  // ascending position
  std::size_t dimension = 0;

  std::vector<double> dense() const;
  double sum() const;
};

struct SoftAssignment {
  std::string user_id;
  SparseDistribution home;
  SparseDistribution work;
};

/// Frequency heuristic. The most-tweeted region is home; if its share of the
/// user's assigned tweets is strictly greater than lambda it is also work,
/// otherwise the second-most-tweeted region is work.
/// Throws std::invalid_argument on a profile without visits.
HardAssignment assign_hard(const ingest::UserProfile& profile, double lambda);

/// Window-restricted argmax for home and work. Every candidate must span at
/// least policy.min_span_days inside its window; nullopt if a window has none.
std::optional<HardAssignment> assign_temporal_hard(const ingest::UserProfile& profile, const AssignmentPolicy& policy);

/// Window-restricted, span-filtered counts normalized to distributions over
/// the region set. nullopt if either distribution would be empty.
std::optional<SoftAssignment> assign_soft(const ingest::UserProfile& profile, const AssignmentPolicy& policy,
                                          const geo::RegionSet& regions);

/// Outer product home * work^T.
SquareMatrix location_matrix(const SoftAssignment& sa);

}  // namespace commuteflow::assign
