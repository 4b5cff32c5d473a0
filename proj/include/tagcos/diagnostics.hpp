#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagcos/clustering.hpp"
#include "tagcos/feature_store.hpp"
#include "tagcos/selection.hpp"

namespace tagcos {

/// Weak-submodularity constants for one matching problem.
struct SubmodularityReport {
    double gradient_bound = 0.0;  // G: largest row l2 norm
    std::size_t budget = 0;       // M or r_k
    double lambda = 0.0;
    double gamma = 0.0;           // lambda / (lambda + budget * G^2)
    double l_max = 0.0;           // Err_lambda at w = 0, i.e. ||target||
    double tol = 0.0;
    // Size bound (optimal_size / gamma) * ln(l_max / tol); absent when
    // lambda = 0 or tol >= l_max.
    std::size_t optimal_size = 1;
    std::optional<double> size_bound;
};

/// lambda / (lambda + budget * gradient_bound^2); requires lambda > 0.
double gamma_bound(double lambda, std::size_t budget, double gradient_bound);

/// (optimal_size / gamma) * ln(l_max / tol); requires l_max > tol > 0.
double coreset_size_bound(std::size_t optimal_size, double gamma, double l_max, double tol);

/// Largest row l2 norm.
double max_row_norm(FeatureView rows);

SubmodularityReport submodularity_report(FeatureView rows, std::span<const double> target, std::size_t budget,
                                         double lambda, double tol, std::size_t optimal_size = 1);

struct BruteForceResult {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
    double error = 0.0;  // Err_lambda
    std::size_t subsets_evaluated = 0;
};

inline constexpr std::size_t kBruteForceGuard = 1'000'000;

/// Exhaustive minimiser of Err_lambda over every subset of size <= budget
/// with exactly solved weights. Subsets that are singular at lambda = 0 are
/// skipped; an independent subset attains the same optimum.
BruteForceResult brute_force_optimal(FeatureView rows, std::span<const double> target, std::size_t budget,
                                     double lambda, bool nonnegative);

/// Smallest subset size whose optimal Err_lambda is below tol (0 when the
/// empty set already is); nullopt when no subset of size <= max_size is.
std::optional<std::size_t> brute_force_min_size(FeatureView rows, std::span<const double> target,
                                                std::size_t max_size, double lambda, double tol, bool nonnegative);

/// Greedy weak-submodularity probe on one instance. With
/// F(S) = ||t||^2 - min_w (||G_S w - t||^2 + lambda ||w||^2) (unconstrained w),
/// computes for every greedy prefix L and the brute-force optimal set S the
/// ratio sum_{j in S\L} [F(L+j) - F(L)] / [F(L u S) - F(L)].
struct SubmodularityProbe {
    double min_ratio = 1.0;
    double gamma = 0.0;  // gamma_bound with the instance's measured G
    std::size_t comparisons = 0;
    bool violated = false;
};

SubmodularityProbe probe_weak_submodularity(FeatureView rows, std::span<const double> target, std::size_t budget,
                                            double lambda);

struct MethodStats {
    double wall_seconds = 0.0;
    double global_error = 0.0;
    std::size_t selected = 0;
};

struct ClusterVsGlobalReport {
    MethodStats clustered;
    MethodStats global;
    SelectionResult clustered_result;
    SelectionResult global_result;
    unsigned hardware_threads = 0;
    std::size_t worker_threads = 0;
};

ClusterVsGlobalReport cluster_vs_global_report(FeatureView features, const ClusterAssignment& assignment,
                                               std::size_t total_budget, double lambda, double tol);

}  // namespace tagcos
