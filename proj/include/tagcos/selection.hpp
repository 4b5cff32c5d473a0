#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tagcos/clustering.hpp"
#include "tagcos/feature_store.hpp"

namespace tagcos {

inline constexpr double kDefaultLambda = 1e-4;
inline constexpr double kDefaultTol = 0.01;

struct OmpConfig {
    double lambda = kDefaultLambda;
    double tol = kDefaultTol;
    std::size_t max_size = 1;
    bool nonnegative_weights = true;

    void validate() const;
};

/// Outcome of one matching-pursuit run over a candidate pool. Indices are
/// local to the pool and listed in selection order.
struct OmpResult {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
    // Err_lambda after each pick; non-increasing.
    std::vector<double> error_trace;
    double final_error = 0.0;    // Err_lambda of the returned weights
    double residual_norm = 0.0;  // unregularised || sum w g - target ||
};

struct ClusterSelection {
    std::size_t cluster = 0;
    std::size_t budget = 0;  // r_k
    std::vector<std::size_t> indices;  // global row indices
    std::vector<double> weights;       // weights matching the cluster target
    double final_error = 0.0;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    std::vector<double> error_trace;

    friend bool operator==(const ClusterSelection&, const ClusterSelection&) = default;
};

struct SelectionResult {
    std::vector<std::size_t> indices;
    // Global-scale weights: cluster weights multiplied by |C_k| / N so that
    // sum_z w_z g_z approximates the full-dataset mean gradient.
    std::vector<double> weights;
    std::vector<ClusterSelection> per_cluster;
    double global_error = 0.0;

    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

/// Largest-remainder split of total across clusters proportional to size.
/// Sum is exactly total and every share is floor or ceil of its quota.
/// Remainder ties go to the smaller cluster, then to the lower index.
std::vector<std::size_t> allocate_budget(std::span<const std::size_t> cluster_sizes, std::size_t total);

/// || sum_i w_i x_i - target ||_2
double matching_error(std::span<const double> weights, FeatureView subset, std::span<const double> target);

/// sqrt(|| sum_i w_i x_i - target ||^2 + lambda ||w||^2). Equals
/// matching_error when lambda = 0 and ||target|| at w = 0.
double regularized_error(std::span<const double> weights, FeatureView subset, std::span<const double> target,
                         double lambda);

/// argmin_w || G w - target ||^2 + lambda ||w||^2, optionally with w >= 0
/// (active-set). G holds the subset rows as columns. Throws a singular
/// error when lambda = 0 and the subset rows are linearly dependent.
std::vector<double> solve_weights(FeatureView subset, std::span<const double> target, double lambda,
                                  bool nonnegative);

/// Greedy matching pursuit: repeatedly adds the unselected candidate whose
/// objective gradient is largest, refits the weights and stops once
/// max_size picks are made or Err_lambda drops below tol.
OmpResult omp_select(FeatureView candidates, std::span<const double> target, const OmpConfig& config);

/// Per-cluster selection: split the budget with allocate_budget, then run
/// omp_select inside every cluster against its centroid.
SelectionResult tagcos_select(FeatureView features, const ClusterAssignment& assignment,
                              std::size_t total_budget, double lambda = kDefaultLambda,
                              double tol = kDefaultTol, bool nonnegative = true);

/// || sum w_z g_z - mean(all rows) || for global indices and weights.
double global_matching_error(FeatureView features, std::span<const std::size_t> indices,
                             std::span<const double> weights);

/// Copies the given rows into a contiguous buffer.
std::vector<float> gather_rows(FeatureView features, std::span<const std::size_t> rows);

}  // namespace tagcos
