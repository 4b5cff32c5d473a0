#include "tagcos/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "tagcos/baselines.hpp"
#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"

namespace tagcos {

namespace {

// Calls fn(subset) for every k-subset of [0, n) in lexicographic order.
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    if (k > n) return;
    while (true) {
        fn(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double binomial(std::size_t n, std::size_t k) {
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return c;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct SubsetFit {
    std::vector<double> weights;
    double error = std::numeric_limits<double>::infinity();
    bool ok = false;
};

SubsetFit fit_subset(FeatureView rows, std::span<const std::size_t> subset, std::span<const double> target,
                     double lambda, bool nonnegative) {
    SubsetFit fit;
    if (subset.empty()) {
        fit.error = norm(target);
        fit.ok = true;
        return fit;
    }
    const auto data = gather_rows(rows, subset);
    const FeatureView view(data, subset.size(), rows.dim);
    try {
        fit.weights = solve_weights(view, target, lambda, nonnegative);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::singular) throw;
        return fit;
    }
    fit.error = regularized_error(fit.weights, view, target, lambda);
    fit.ok = true;
    return fit;
}

// ||t||^2 - min_w (||G_S w - t||^2 + lambda ||w||^2), unconstrained w.
double f_value(FeatureView rows, std::span<const std::size_t> subset, std::span<const double> target,
               double lambda) {
    const SubsetFit fit = fit_subset(rows, subset, target, lambda, false);
    const double t = norm(target);
    return t * t - fit.error * fit.error;
}

}  // namespace

double gamma_bound(double lambda, std::size_t budget, double gradient_bound) {
    require(lambda > 0.0, ErrorKind::invalid_argument, "gamma bound needs lambda > 0");
    require(gradient_bound >= 0.0, ErrorKind::invalid_argument, "gradient bound must be >= 0");
    return lambda / (lambda + static_cast<double>(budget) * gradient_bound * gradient_bound);
}

double coreset_size_bound(std::size_t optimal_size, double gamma, double l_max, double tol) {
    require(gamma > 0.0 && gamma <= 1.0, ErrorKind::invalid_argument, "gamma must lie in (0, 1]");
    require(tol > 0.0, ErrorKind::invalid_argument, "tol must be > 0");
    require(l_max > tol, ErrorKind::invalid_argument, "tol must be below l_max");
    return (static_cast<double>(optimal_size) / gamma) * std::log(l_max / tol);
}

double max_row_norm(FeatureView rows) {
    double g = 0.0;
    for (std::size_t i = 0; i < rows.rows; ++i) {
        double s = 0.0;
        for (float v : rows.row(i)) s += static_cast<double>(v) * v;
        g = std::max(g, std::sqrt(s));
    }
    return g;
}

SubmodularityReport submodularity_report(FeatureView rows, std::span<const double> target, std::size_t budget,
                                         double lambda, double tol, std::size_t optimal_size) {
    SubmodularityReport r;
    r.gradient_bound = max_row_norm(rows);
    r.budget = budget;
    r.lambda = lambda;
    r.tol = tol;
    r.l_max = norm(target);
    r.optimal_size = optimal_size;
    if (lambda > 0.0) {
        r.gamma = gamma_bound(lambda, budget, r.gradient_bound);
        if (tol > 0.0 && r.l_max > tol) r.size_bound = coreset_size_bound(optimal_size, r.gamma, r.l_max, tol);
    }
    return r;
}

BruteForceResult brute_force_optimal(FeatureView rows, std::span<const double> target, std::size_t budget,
                                     double lambda, bool nonnegative) {
    require(target.size() == rows.dim, ErrorKind::dim_mismatch, "target length");
    budget = std::min(budget, rows.rows);
    double total = 0.0;
    for (std::size_t s = 0; s <= budget; ++s) total += binomial(rows.rows, s);
    require(total <= static_cast<double>(kBruteForceGuard), ErrorKind::guard_exceeded,
            std::to_string(static_cast<long long>(total)) + " subsets");

    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(static_cast<std::size_t>(total));
    for (std::size_t s = 0; s <= budget; ++s)
        for_each_combination(rows.rows, s, [&](const std::vector<std::size_t>& c) { subsets.push_back(c); });

    std::vector<SubsetFit> fits(subsets.size());
    parallel_for(
        subsets.size(),
        [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) fits[i] = fit_subset(rows, subsets[i], target, lambda, nonnegative);
        },
        64);

    BruteForceResult out;
    out.subsets_evaluated = subsets.size();
    std::size_t best = 0;
    for (std::size_t i = 1; i < fits.size(); ++i)
        if (fits[i].ok && fits[i].error < fits[best].error) best = i;
    out.indices = subsets[best];
    out.weights = fits[best].weights;
    out.error = fits[best].error;
    return out;
}

std::optional<std::size_t> brute_force_min_size(FeatureView rows, std::span<const double> target,
                                                std::size_t max_size, double lambda, double tol,
                                                bool nonnegative) {
    max_size = std::min(max_size, rows.rows);
    double total = 0.0;
    for (std::size_t s = 0; s <= max_size; ++s) total += binomial(rows.rows, s);
    require(total <= static_cast<double>(kBruteForceGuard), ErrorKind::guard_exceeded, "min-size search");
    for (std::size_t s = 0; s <= max_size; ++s) {
        bool found = false;
        for_each_combination(rows.rows, s, [&](const std::vector<std::size_t>& c) {
            if (found) return;
            const SubsetFit fit = fit_subset(rows, c, target, lambda, nonnegative);
            if (fit.ok && fit.error < tol) found = true;
        });
        if (found) return s;
    }
    return std::nullopt;
}

SubmodularityProbe probe_weak_submodularity(FeatureView rows, std::span<const double> target, std::size_t budget,
                                            double lambda) {
    require(lambda > 0.0, ErrorKind::invalid_argument, "probe needs lambda > 0");
    budget = std::min(budget, rows.rows);
    SubmodularityProbe probe;
    probe.gamma = gamma_bound(lambda, budget, max_row_norm(rows));

    OmpConfig cfg{lambda, 0.0, budget, false};
    const OmpResult greedy = omp_select(rows, target, cfg);

    for (std::size_t prefix = 0; prefix < greedy.indices.size(); ++prefix) {
        std::vector<std::size_t> base(greedy.indices.begin(), greedy.indices.begin() + static_cast<std::ptrdiff_t>(prefix));
        std::vector<char> in_base(rows.rows, 0);
        for (auto i : base) in_base[i] = 1;
        std::vector<std::size_t> outside;
        for (std::size_t i = 0; i < rows.rows; ++i)
            if (!in_base[i]) outside.push_back(i);

        const double f_base = f_value(rows, base, target, lambda);
        std::vector<double> single_gain(rows.rows, 0.0);
        for (auto j : outside) {
            auto with = base;
            with.push_back(j);
            single_gain[j] = f_value(rows, with, target, lambda) - f_base;
        }
        const std::size_t max_extra = std::min(budget - prefix, outside.size());
        for (std::size_t s = 2; s <= max_extra; ++s) {
            for_each_combination(outside.size(), s, [&](const std::vector<std::size_t>& c) {
                auto joint = base;
                double sum_single = 0.0;
                for (auto ci : c) {
                    joint.push_back(outside[ci]);
                    sum_single += single_gain[outside[ci]];
                }
                const double joint_gain = f_value(rows, joint, target, lambda) - f_base;
                if (joint_gain <= 1e-12 * (1.0 + std::abs(f_base))) return;
                const double ratio = sum_single / joint_gain;
                ++probe.comparisons;
                probe.min_ratio = std::min(probe.min_ratio, ratio);
            });
        }
    }
    probe.violated = probe.min_ratio < probe.gamma;
    return probe;
}

ClusterVsGlobalReport cluster_vs_global_report(FeatureView features, const ClusterAssignment& assignment,
                                               std::size_t total_budget, double lambda, double tol) {
    using clock = std::chrono::steady_clock;
    ClusterVsGlobalReport r;
    r.hardware_threads = std::thread::hardware_concurrency();
    r.worker_threads = thread_count();

    auto t0 = clock::now();
    r.clustered_result = tagcos_select(features, assignment, total_budget, lambda, tol);
    auto t1 = clock::now();
    r.global_result = global_omp_select(features, total_budget, lambda, tol);
    auto t2 = clock::now();

    r.clustered = {std::chrono::duration<double>(t1 - t0).count(), r.clustered_result.global_error,
                   r.clustered_result.indices.size()};
    r.global = {std::chrono::duration<double>(t2 - t1).count(), r.global_result.global_error,
                r.global_result.indices.size()};
    return r;
}

}  // namespace tagcos
