#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "commuteflow/flow.hpp"
#include "commuteflow/geo.hpp"
#include "commuteflow/matrix.hpp"

namespace commuteflow::metrics {

/// Tolerance within which the min-form and absolute-error-form CPC must agree.
inline constexpr double kCpcFormTolerance = 1e-12;

struct CpcForms {
  double common = 0.0;     // Σ min(L, L~)
  double total = 0.0;      // Σ (L + L~)
  double abs_error = 0.0;  // Σ |L - L~|
  double cpc = 0.0;        // 2 common / total
  double cpc_alt = 0.0;    // 1 - abs_error / total
};

/// Both CPC forms on raw matrices. Throws std::invalid_argument on a size
/// mismatch or when either matrix has zero mass.
CpcForms cpc_forms(const SquareMatrix& a, const SquareMatrix& b);

struct OutwardError {
  std::vector<double> error;           // per origin, in [0, 2]
  std::vector<std::size_t> zero_rows;  // origins where either row has no mass
};

/// Per-origin L1 gap between the row-normalized outward distributions.
OutwardError outward_error(const flow::FlowMatrix& a, const flow::FlowMatrix& b);

struct CpcReport {
  double cpc = 0.0;
  double cpc_alt = 0.0;
  flow::Commuting mode = flow::Commuting::all;
  double numerator = 0.0;
  double denominator = 0.0;
  OutwardError outward;
};

/// Throws std::invalid_argument on mismatched dimensions, region order or
/// diagonal mode, and std::logic_error if the two forms disagree.
CpcReport cpc(const flow::FlowMatrix& estimate, const flow::FlowMatrix& reference);

struct DistanceHistogram {
  std::vector<double> edges;  // km, strictly increasing from 0
  std::vector<double> mass;   // edges.size() - 1 half-open bins
  double overflow = 0.0;      // d >= edges.back()
  double total = 0.0;
};

DistanceHistogram distance_histogram(const flow::FlowMatrix& m, const SquareMatrix& distances_km,
                                     std::span<const double> edges);
DistanceHistogram distance_histogram(const flow::FlowMatrix& m, const geo::RegionSet& rs,
                                     std::span<const double> edges);

/// Average ranks (1-based), ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;
};

/// Two-sided permutation test on Spearman's rho, permuting y:
/// p = (1 + #{|rho*| >= |rho|}) / (1 + replicates).
/// Throws std::invalid_argument for fewer than 3 pairs or a constant vector.
CorrelationReport correlation_with_permutation(std::span<const double> x, std::span<const double> y,
                                               std::size_t replicates, std::uint64_t seed);

struct InOutRatioStats {
  std::vector<double> inward;   // off-diagonal column sums
  std::vector<double> outward;  // off-diagonal row sums
  std::vector<std::optional<double>> ratio;
  std::vector<std::size_t> excluded;  // unlabelled, or lacking inward or outward flow
  std::vector<double> geometric_mean;  // per cluster label
  std::vector<std::size_t> cluster_size;
};

/// Labels are 0..L-1 per region; a negative label leaves the region out. Throws std::invalid_argument when a cluster
/// has no usable region.
InOutRatioStats inout_ratio_stats(const flow::FlowMatrix& reference, std::span<const int> labels);

/// Mean hourly count over [10,15) divided by the mean over [20,23).
/// Throws std::domain_error when the evening rate is zero.
double daytime_evening_ratio(std::span<const double, 24> hourly);

}  // namespace commuteflow::metrics
