#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tagcos/feature_store.hpp"

namespace tagcos {

/// Per-sample labels, K x d centroids (row-major, double) and cluster sizes.
struct ClusterAssignment {
    std::vector<std::uint32_t> labels;
    std::vector<double> centroids;
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
    // Inertia measured after each assignment step, in iteration order.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
    bool converged = false;

    std::span<const double> centroid(std::size_t c) const {
        return std::span<const double>(centroids).subspan(c * dim, dim);
    }

    /// Throws unless labels/sizes/centroids are mutually consistent for n rows.
    void validate(std::size_t n_rows) const;

    friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

struct KMeansOptions {
    std::size_t k = 100;
    std::uint64_t seed = 0;
    std::size_t max_iters = 300;
    double tol = 1e-6;
    // Cluster unit-l2 normalised rows instead of the raw features.
    bool normalize = false;
    // Independent seedings; the run with the lowest inertia is kept.
    std::size_t restarts = 10;
};

/// Column mean of the given rows, summed in row order in double precision.
std::vector<double> column_mean(FeatureView features);

/// Lloyd iterations from a greedy k-means++ start seeded by options.seed,
/// repeated options.restarts times (restart r > 0 seeds from a stream derived
/// from seed and r). Lowest final inertia wins; ties keep the earlier run.
/// Stops when labels stop changing, the largest centroid shift drops below
/// tol, or max_iters is reached. Emptied clusters are re-seeded to the
/// point farthest from its nearest centroid, so every size is >= 1.
ClusterAssignment kmeans(FeatureView features, const KMeansOptions& options);

/// Same Lloyd loop from caller-supplied initial centroids (k x dim).
ClusterAssignment kmeans_from_centroids(FeatureView features, std::span<const double> initial_centroids,
                                        std::size_t k, const KMeansOptions& options);

/// Seeding only (exposed for tests).
std::vector<double> kmeans_plus_plus(FeatureView features, std::size_t k, std::uint64_t seed);

/// Index of the closest centroid by squared Euclidean distance; ties go to
/// the lowest index.
std::size_t nearest_centroid(const ClusterAssignment& assignment, std::span<const double> point);

}  // namespace tagcos
