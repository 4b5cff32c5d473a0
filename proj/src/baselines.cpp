#include "tagcos/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tagcos/clustering.hpp"
#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"
#include "tagcos/random.hpp"

namespace tagcos {

namespace {

double distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

BaselineMethod parse_baseline_method(std::string_view name) {
    if (name == "uniform") return BaselineMethod::uniform;
    if (name == "hardest") return BaselineMethod::hardest;
    if (name == "lowest_score" || name == "perplexity") return BaselineMethod::lowest_score;
    if (name == "kcenter_greedy" || name == "kcenter") return BaselineMethod::kcenter_greedy;
    if (name == "global_omp") return BaselineMethod::global_omp;
    throw Error(ErrorKind::usage, "unknown baseline method '" + std::string(name) + "'");
}

std::string_view to_string(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::uniform: return "uniform";
        case BaselineMethod::hardest: return "hardest";
        case BaselineMethod::lowest_score: return "lowest_score";
        case BaselineMethod::kcenter_greedy: return "kcenter_greedy";
        case BaselineMethod::global_omp: return "global_omp";
    }
    return "unknown";
}

std::vector<std::size_t> uniform_select(std::size_t n, std::size_t budget, std::uint64_t seed) {
    require(budget <= n, ErrorKind::invalid_argument,
            "budget " + std::to_string(budget) + " exceeds n " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng rng(seed, 0x756e69666f726dULL);
    for (std::size_t i = 0; i < budget; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(budget);
    return perm;
}

std::vector<std::size_t> score_rank_select(const SampleManifest& manifest, std::size_t budget,
                                           ScoreDirection direction) {
    require(budget <= manifest.size(), ErrorKind::invalid_argument, "budget exceeds manifest size");
    for (const auto& r : manifest.records)
        require(r.score.has_value(), ErrorKind::invalid_argument,
                "sample " + std::to_string(r.sample_id) + " has no score");
    std::vector<std::size_t> order(manifest.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& rec = manifest.records;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = *rec[a].score, sb = *rec[b].score;
        if (sa != sb) return direction == ScoreDirection::highest ? sa > sb : sa < sb;
        return rec[a].sample_id < rec[b].sample_id;
    });
    order.resize(budget);
    return order;
}

KCenterResult kcenter_greedy_from(FeatureView features, std::size_t budget, std::size_t start) {
    require(budget <= features.rows, ErrorKind::invalid_argument, "budget exceeds sample count");
    require(start < features.rows, ErrorKind::invalid_argument, "start row out of range");
    KCenterResult out;
    if (budget == 0) {
        out.covering_radius = std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> nearest(features.rows, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(features.rows, 0);
    std::size_t next = start;
    out.min_distance_trace.push_back(std::numeric_limits<double>::infinity());
    while (true) {
        out.indices.push_back(next);
        chosen[next] = 1;
        const auto center = features.row(next);
        parallel_for(features.rows, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) nearest[i] = std::min(nearest[i], distance(features.row(i), center));
        });
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < features.rows; ++i)
            if (!chosen[i] && nearest[i] > far_d) {
                far_d = nearest[i];
                far = i;
            }
        out.covering_radius = std::max(far_d, 0.0);
        if (out.indices.size() == budget) break;
        out.min_distance_trace.push_back(far_d);
        next = far;
    }
    return out;
}

KCenterResult kcenter_greedy(FeatureView features, std::size_t budget, std::uint64_t seed) {
    require(features.rows >= 1, ErrorKind::invalid_argument, "no samples");
    CounterRng rng(seed, 0x6b63656e746572ULL);
    return kcenter_greedy_from(features, budget, static_cast<std::size_t>(rng.below(features.rows)));
}

double covering_radius(FeatureView features, const std::vector<std::size_t>& selected) {
    require(!selected.empty(), ErrorKind::invalid_argument, "empty selection");
    double radius = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto s : selected) best = std::min(best, distance(features.row(i), features.row(s)));
        radius = std::max(radius, best);
    }
    return radius;
}

SelectionResult global_omp_select(FeatureView features, std::size_t budget, double lambda, double tol,
                                  bool nonnegative) {
    require(budget <= features.rows, ErrorKind::invalid_argument, "budget exceeds sample count");
    SelectionResult out;
    if (budget == 0) {
        out.global_error = global_matching_error(features, out.indices, out.weights);
        return out;
    }
    const auto target = column_mean(features);
    OmpResult r = omp_select(features, target, OmpConfig{lambda, tol, budget, nonnegative});

    ClusterSelection cs;
    cs.cluster = 0;
    cs.budget = budget;
    cs.indices = r.indices;
    cs.weights = r.weights;
    cs.final_error = r.final_error;
    cs.residual_norm = r.residual_norm;
    cs.iterations = r.error_trace.size();
    cs.error_trace = std::move(r.error_trace);

    out.indices = std::move(r.indices);
    out.weights = std::move(r.weights);
    out.per_cluster.push_back(std::move(cs));
    out.global_error = global_matching_error(features, out.indices, out.weights);
    return out;
}

SelectionResult unweighted_result(FeatureView features, std::vector<std::size_t> indices) {
    SelectionResult out;
    out.indices = std::move(indices);
    if (!out.indices.empty()) out.weights.assign(out.indices.size(), 1.0 / static_cast<double>(out.indices.size()));
    out.global_error = global_matching_error(features, out.indices, out.weights);
    return out;
}

}  // namespace tagcos
