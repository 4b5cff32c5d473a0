#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tagcos/feature_store.hpp"
#include "tagcos/selection.hpp"

namespace tagcos {

enum class BaselineMethod { uniform, hardest, lowest_score, kcenter_greedy, global_omp };

BaselineMethod parse_baseline_method(std::string_view name);
std::string_view to_string(BaselineMethod method);

enum class ScoreDirection { highest, lowest };

/// budget distinct indices drawn uniformly without replacement (partial
/// Fisher-Yates driven by a counter-based generator).
std::vector<std::size_t> uniform_select(std::size_t n, std::size_t budget, std::uint64_t seed);

/// Row positions of the budget most extreme manifest scores; ties go to the
/// lower sample_id.
std::vector<std::size_t> score_rank_select(const SampleManifest& manifest, std::size_t budget,
                                           ScoreDirection direction);

struct KCenterResult {
    std::vector<std::size_t> indices;
    // Distance from the farthest remaining point to the selected set just
    // before each pick (first entry is +inf for the random start).
    std::vector<double> min_distance_trace;
    double covering_radius = 0.0;
};

/// Farthest-first traversal from a seeded random start; ties by lowest index.
KCenterResult kcenter_greedy(FeatureView features, std::size_t budget, std::uint64_t seed);

/// Same traversal from an explicit start row.
KCenterResult kcenter_greedy_from(FeatureView features, std::size_t budget, std::size_t start);

/// max_i min_{s in selected} ||x_i - x_s||
double covering_radius(FeatureView features, const std::vector<std::size_t>& selected);

/// omp_select over all rows against the full-dataset mean gradient.
SelectionResult global_omp_select(FeatureView features, std::size_t budget, double lambda = kDefaultLambda,
                                  double tol = kDefaultTol, bool nonnegative = true);

/// Wraps weightless baseline indices in the common result schema (weights
/// 1/|S| so global_error compares the subset mean with the full mean).
SelectionResult unweighted_result(FeatureView features, std::vector<std::size_t> indices);

}  // namespace tagcos
