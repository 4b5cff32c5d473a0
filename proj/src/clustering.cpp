#include "tagcos/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"
#include "tagcos/random.hpp"

namespace tagcos {

namespace {

double squared_distance(std::span<const float> x, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = static_cast<double>(x[j]) - c[j];
        s += diff * diff;
    }
    return s;
}

double squared_distance(std::span<const float> x, std::span<const float> y) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = static_cast<double>(x[j]) - static_cast<double>(y[j]);
        s += diff * diff;
    }
    return s;
}

std::span<const double> centroid_row(const std::vector<double>& c, std::size_t k, std::size_t dim) {
    return std::span<const double>(c).subspan(k * dim, dim);
}

// Nearest centroid and its squared distance for every row.
void assign_all(FeatureView x, const std::vector<double>& centroids, std::size_t k,
                std::vector<std::uint32_t>& labels, std::vector<double>& d2) {
    labels.resize(x.rows);
    d2.resize(x.rows);
    parallel_for(x.rows, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto row = x.row(i);
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(row, centroid_row(centroids, c, x.dim));
                if (d < best) {
                    best = d;
                    arg = static_cast<std::uint32_t>(c);
                }
            }
            labels[i] = arg;
            d2[i] = best;
        }
    });
}

// Per-cluster member means in row order (matches column_mean for k = 1).
// Clusters without members keep count 0 and an all-zero row.
void member_means(FeatureView x, const std::vector<std::uint32_t>& labels, std::size_t k,
                  std::vector<double>& means, std::vector<std::size_t>& counts) {
    means.assign(k * x.dim, 0.0);
    counts.assign(k, 0);
    for (auto l : labels) ++counts[l];
    parallel_for(
        x.dim,
        [&](std::size_t j0, std::size_t j1) {
            for (std::size_t i = 0; i < x.rows; ++i) {
                const auto row = x.row(i);
                double* dst = means.data() + labels[i] * x.dim;
                for (std::size_t j = j0; j < j1; ++j) dst[j] += static_cast<double>(row[j]);
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] == 0) continue;
                const double n = static_cast<double>(counts[c]);
                for (std::size_t j = j0; j < j1; ++j) means[c * x.dim + j] = means[c * x.dim + j] / n;
            }
        },
        16);
}

// Moves the point farthest from its nearest centroid into each empty cluster.
// Returns true when any cluster was re-seeded.
bool reseed_empty(FeatureView x, std::vector<double>& centroids, std::size_t k,
                  std::vector<std::uint32_t>& labels, std::vector<std::size_t>& counts) {
    bool any_empty = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
    if (!any_empty) return false;

    std::vector<std::uint32_t> nearest;
    std::vector<double> d2;
    assign_all(x, centroids, k, nearest, d2);
    std::vector<bool> used(x.rows, false);

    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t best = x.rows;
        double best_d = -1.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            if (used[i] || counts[labels[i]] <= 1) continue;
            if (d2[i] > best_d) {
                best_d = d2[i];
                best = i;
            }
        }
        // k <= n guarantees a donor cluster with more than one member.
        require(best < x.rows, ErrorKind::invalid_argument, "no point available to re-seed cluster");
        used[best] = true;
        --counts[labels[best]];
        labels[best] = static_cast<std::uint32_t>(c);
        counts[c] = 1;
        const auto row = x.row(best);
        for (std::size_t j = 0; j < x.dim; ++j) centroids[c * x.dim + j] = static_cast<double>(row[j]);
        for (std::size_t i = 0; i < x.rows; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), row));
    }
    return true;
}

std::vector<float> normalized_copy(FeatureView x) {
    std::vector<float> out(x.data.begin(), x.data.end());
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.dim; ++j) s += static_cast<double>(out[i * x.dim + j]) * out[i * x.dim + j];
        if (s <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(s);
        for (std::size_t j = 0; j < x.dim; ++j)
            out[i * x.dim + j] = static_cast<float>(static_cast<double>(out[i * x.dim + j]) * inv);
    }
    return out;
}

void check_args(FeatureView x, std::size_t k, const KMeansOptions& options) {
    require(k >= 1, ErrorKind::invalid_argument, "k must be >= 1");
    require(k <= x.rows, ErrorKind::invalid_argument,
            "k = " + std::to_string(k) + " exceeds sample count " + std::to_string(x.rows));
    require(options.max_iters >= 1, ErrorKind::invalid_argument, "max_iters must be >= 1");
    require(options.tol >= 0.0, ErrorKind::invalid_argument, "tol must be >= 0");
}

ClusterAssignment lloyd(FeatureView x, std::vector<double> centroids, std::size_t k,
                        const KMeansOptions& options) {
    ClusterAssignment out;
    out.k = k;
    out.dim = x.dim;

    std::vector<std::uint32_t> labels, prev;
    std::vector<double> d2, means;
    std::vector<std::size_t> counts;
    bool reseeded_last = false;
    bool need_final_assign = true;

    for (std::size_t it = 0; it < options.max_iters; ++it) {
        assign_all(x, centroids, k, labels, d2);
        double inertia = 0.0;
        for (double v : d2) inertia += v;
        out.inertia_trace.push_back(inertia);

        if (!prev.empty() && labels == prev && !reseeded_last) {
            out.converged = true;
            need_final_assign = false;
            break;
        }

        member_means(x, labels, k, means, counts);
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] == 0)
                std::copy_n(centroids.begin() + static_cast<std::ptrdiff_t>(c * x.dim), x.dim,
                            means.begin() + static_cast<std::ptrdiff_t>(c * x.dim));
        reseeded_last = reseed_empty(x, means, k, labels, counts);

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.dim; ++j) {
                const double diff = means[c * x.dim + j] - centroids[c * x.dim + j];
                s += diff * diff;
            }
            shift = std::max(shift, std::sqrt(s));
        }
        centroids.swap(means);
        prev = labels;
        out.iterations = it + 1;
        if (!reseeded_last && shift < options.tol) {
            out.converged = true;
            break;
        }
    }

    if (need_final_assign) {
        assign_all(x, centroids, k, labels, d2);
        // Exact ties (duplicate points) can empty a cluster again here.
        counts.assign(k, 0);
        for (auto l : labels) ++counts[l];
        if (reseed_empty(x, centroids, k, labels, counts))
            for (std::size_t i = 0; i < x.rows; ++i) d2[i] = squared_distance(x.row(i), centroid_row(centroids, labels[i], x.dim));
        double inertia = 0.0;
        for (double v : d2) inertia += v;
        out.inertia_trace.push_back(inertia);
    }

    out.labels = std::move(labels);
    out.centroids = std::move(centroids);
    out.sizes.assign(k, 0);
    for (auto l : out.labels) ++out.sizes[l];
    out.inertia = out.inertia_trace.back();
    return out;
}

ClusterAssignment run(FeatureView x, std::vector<double> init, std::size_t k, const KMeansOptions& options) {
    if (!options.normalize) return lloyd(x, std::move(init), k, options);
    const std::vector<float> unit = normalized_copy(x);
    ClusterAssignment a = lloyd(FeatureView(unit, x.rows, x.dim), std::move(init), k, options);
    // Matching targets stay in raw gradient space: report member means of the
    // unnormalised rows for the partition found on the unit sphere.
    std::vector<std::size_t> counts;
    member_means(x, a.labels, k, a.centroids, counts);
    return a;
}

}  // namespace

std::vector<double> column_mean(FeatureView features) {
    std::vector<double> mean(features.dim, 0.0);
    require(features.rows >= 1, ErrorKind::invalid_argument, "mean of zero rows");
    parallel_for(
        features.dim,
        [&](std::size_t j0, std::size_t j1) {
            for (std::size_t i = 0; i < features.rows; ++i) {
                const auto row = features.row(i);
                for (std::size_t j = j0; j < j1; ++j) mean[j] += static_cast<double>(row[j]);
            }
            const double n = static_cast<double>(features.rows);
            for (std::size_t j = j0; j < j1; ++j) mean[j] = mean[j] / n;
        },
        16);
    return mean;
}

std::vector<double> kmeans_plus_plus(FeatureView x, std::size_t k, std::uint64_t seed) {
    require(k >= 1 && k <= x.rows, ErrorKind::invalid_argument, "k out of range for seeding");
    CounterRng rng(seed, 0x6b6d65616e73ULL);
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

    std::vector<double> centers;
    centers.reserve(k * x.dim);
    auto push_center = [&](std::size_t i) {
        const auto row = x.row(i);
        for (float v : row) centers.push_back(static_cast<double>(v));
    };

    std::size_t first = static_cast<std::size_t>(rng.below(x.rows));
    push_center(first);
    std::vector<double> d2(x.rows);
    parallel_for(x.rows, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) d2[i] = squared_distance(x.row(i), x.row(first));
    });

    std::vector<double> cumulative(x.rows);
    std::vector<double> cand_d2(x.rows), best_d2(x.rows);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            total += d2[i];
            cumulative[i] = total;
        }
        std::size_t best_idx = 0;
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t cand;
            if (total > 0.0) {
                const double u = rng.uniform() * total;
                cand = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                cumulative.begin());
                cand = std::min(cand, x.rows - 1);
            } else {
                cand = static_cast<std::size_t>(rng.below(x.rows));
            }
            parallel_for(x.rows, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i)
                    cand_d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(cand)));
            });
            double potential = 0.0;
            for (double v : cand_d2) potential += v;
            if (potential < best_potential) {
                best_potential = potential;
                best_idx = cand;
                best_d2.swap(cand_d2);
            }
        }
        push_center(best_idx);
        d2.swap(best_d2);
    }
    return centers;
}

ClusterAssignment kmeans(FeatureView features, const KMeansOptions& options) {
    check_args(features, options.k, options);
    require(options.restarts >= 1, ErrorKind::invalid_argument, "restarts must be >= 1");
    std::vector<float> unit;
    if (options.normalize) unit = normalized_copy(features);
    const FeatureView seed_space = options.normalize ? FeatureView(unit, features.rows, features.dim) : features;
    ClusterAssignment best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
        const std::uint64_t seed = r == 0 ? options.seed : CounterRng(options.seed, 0x72657374ULL + r).next_u64();
        ClusterAssignment a = run(features, kmeans_plus_plus(seed_space, options.k, seed), options.k, options);
        if (r == 0 || a.inertia < best.inertia) best = std::move(a);
    }
    return best;
}

ClusterAssignment kmeans_from_centroids(FeatureView features, std::span<const double> initial_centroids,
                                        std::size_t k, const KMeansOptions& options) {
    check_args(features, k, options);
    require(initial_centroids.size() == k * features.dim, ErrorKind::length_mismatch, "initial centroids");
    return run(features, std::vector<double>(initial_centroids.begin(), initial_centroids.end()), k, options);
}

std::size_t nearest_centroid(const ClusterAssignment& assignment, std::span<const double> point) {
    require(point.size() == assignment.dim, ErrorKind::length_mismatch,
            "point length " + std::to_string(point.size()) + " vs dim " + std::to_string(assignment.dim));
    require(assignment.k >= 1, ErrorKind::invalid_argument, "empty assignment");
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < assignment.k; ++c) {
        const auto cen = assignment.centroid(c);
        double s = 0.0;
        for (std::size_t j = 0; j < point.size(); ++j) {
            const double diff = point[j] - cen[j];
            s += diff * diff;
        }
        if (s < best) {
            best = s;
            arg = c;
        }
    }
    return arg;
}

void ClusterAssignment::validate(std::size_t n_rows) const {
    require(k >= 1, ErrorKind::invalid_argument, "assignment has no clusters");
    require(labels.size() == n_rows, ErrorKind::length_mismatch,
            "assignment has " + std::to_string(labels.size()) + " labels for " + std::to_string(n_rows) + " rows");
    require(centroids.size() == k * dim, ErrorKind::length_mismatch, "centroid matrix size");
    require(sizes.size() == k, ErrorKind::length_mismatch, "sizes length");
    std::vector<std::size_t> count(k, 0);
    for (auto l : labels) {
        require(l < k, ErrorKind::invalid_argument, "label out of range");
        ++count[l];
    }
    require(count == sizes, ErrorKind::invalid_argument, "sizes disagree with labels");
}

}  // namespace tagcos
