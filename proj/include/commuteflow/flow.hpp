#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commuteflow/assign.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/matrix.hpp"

namespace commuteflow::flow {

enum class Provenance { twitter_hard, twitter_soft, radiation_std, radiation_1p, census, synthetic_truth };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

/// Which commuters a comparison covers: everyone, or only those working
/// outside their home region.
enum class Commuting { all, external };

std::optional<Commuting> parse_commuting(std::string_view s);
std::string_view to_string(Commuting c);

struct FlowMatrix {
  SquareMatrix values;
  std::vector<std::string> region_ids;  // row/column order
  bool diagonal_meaningful = true;
  Provenance provenance = Provenance::census;

  FlowMatrix() = default;
  FlowMatrix(std::vector<std::string> ids, Provenance prov, bool diagonal = true)
      : values(ids.size()), region_ids(std::move(ids)), diagonal_meaningful(diagonal), provenance(prov) {}

  std::size_t size() const { return region_ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }

  /// Throws std::invalid_argument on negative/non-finite entries, a dimension
  /// mismatch, or a nonzero diagonal when the diagonal is not meaningful.
  void check() const;
};

struct CommuterMarginals {
  std::vector<double> c;  // commuters resident in each region
  double C = 0.0;
  std::vector<double> n;  // populations
  double N = 0.0;

  /// c given directly (e.g. census row totals).
  static CommuterMarginals from_counts(std::vector<double> c, std::vector<double> n);
  /// c_i = C n_i / N.
  static CommuterMarginals uniform(double total_commuters, std::vector<double> n);
  /// Row totals of a reference matrix; external mode excludes the diagonal.
  static CommuterMarginals from_flows(const FlowMatrix& m, Commuting mode, std::vector<double> n);
};

std::vector<double> populations(const geo::RegionSet& rs);

/// Entry (i,j) counts users living in i and working in j.
/// Throws std::invalid_argument on a region id missing from the set.
FlowMatrix flows_from_hard(std::span<const assign::HardAssignment> assignments, const geo::RegionSet& rs);

/// Mean of the per-user location matrices. Throws on an empty input.
FlowMatrix flows_from_soft(std::span<const assign::SoftAssignment> assignments, const geo::RegionSet& rs);

struct NormalizeResult {
  FlowMatrix flows;
  std::vector<std::size_t> zero_rows;  // rows with no mass, left at zero
};

/// Rescales every nonzero row i to sum to c_i. External mode zeroes the
/// diagonal first.
NormalizeResult normalize_rows(const FlowMatrix& m, const CommuterMarginals& marginals, Commuting mode);

FlowMatrix zero_diagonal(const FlowMatrix& m);

// OD CSV: a `#provenance=<tag>,diagonal=<true|false>` line, a
// `home_id,work_id,value` column header, then one triplet per nonzero entry in
// row-major order. Values use the shortest round-trip decimal form.
void write_od_csv(std::ostream& out, const FlowMatrix& m);
void write_od_csv_file(const std::string& path, const FlowMatrix& m);
/// Ids are resolved against `rs`; unknown ids and duplicate pairs throw.
/// A missing provenance line reads as census with a meaningful diagonal.
FlowMatrix read_od_csv(std::istream& in, const geo::RegionSet& rs);
FlowMatrix read_od_csv_file(const std::string& path, const geo::RegionSet& rs);

std::string format_double(double v);

}  // namespace commuteflow::flow
