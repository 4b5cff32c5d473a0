#include "tagcos/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"

namespace tagcos {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    return s;
}

double dot(std::span<const float> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * b[j];
    return s;
}

// Upper-triangular R with A = R^T R, stored column by column (column j has
// j + 1 entries). Supports appending a row/column of A and deleting one.
class UpperCholesky {
public:
    std::size_t size() const { return cols_.size(); }

    // a: A(existing, new) in factor order; diag: A(new, new).
    bool append(std::span<const double> a, double diag) {
        const std::size_t p = cols_.size();
        std::vector<double> r(p + 1);
        double ss = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            double v = a[i];
            for (std::size_t k = 0; k < i; ++k) v -= cols_[i][k] * r[k];
            r[i] = v / cols_[i][i];
            ss += r[i] * r[i];
        }
        const double rho2 = diag - ss;
        if (!(diag > 0.0) || !(rho2 > 1e-12 * diag)) return false;
        r[p] = std::sqrt(rho2);
        cols_.push_back(std::move(r));
        return true;
    }

    void remove(std::size_t k) {
        cols_.erase(cols_.begin() + static_cast<std::ptrdiff_t>(k));
        for (std::size_t j = k; j < cols_.size(); ++j) {
            const double a = cols_[j][j];
            const double b = cols_[j][j + 1];
            const double r = std::hypot(a, b);
            const double c = a / r;
            const double s = b / r;
            cols_[j][j] = r;
            cols_[j].pop_back();
            for (std::size_t m = j + 1; m < cols_.size(); ++m) {
                const double x = cols_[m][j];
                const double y = cols_[m][j + 1];
                cols_[m][j] = c * x + s * y;
                cols_[m][j + 1] = -s * x + c * y;
            }
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        const std::size_t p = cols_.size();
        std::vector<double> y(p);
        for (std::size_t i = 0; i < p; ++i) {
            double v = b[i];
            for (std::size_t k = 0; k < i; ++k) v -= cols_[i][k] * y[k];
            y[i] = v / cols_[i][i];
        }
        for (std::size_t ii = p; ii-- > 0;) {
            double v = y[ii];
            for (std::size_t j = ii + 1; j < p; ++j) v -= cols_[j][ii] * y[j];
            y[ii] = v / cols_[ii][ii];
        }
        return y;
    }

private:
    std::vector<std::vector<double>> cols_;
};

// Incremental solver for min ||G w - t||^2 + lambda ||w||^2 (optionally
// w >= 0) over a growing set of pool rows. The nonnegative case runs
// Lawson-Hanson warm-started from the previous solution.
class WeightSolver {
public:
    WeightSolver(FeatureView pool, std::span<const double> target, double lambda, bool nonnegative)
        : pool_(pool), target_(target), lambda_(lambda), nonnegative_(nonnegative) {}

    std::size_t size() const { return members_.size(); }
    const std::vector<std::size_t>& members() const { return members_; }
    const std::vector<double>& weights() const { return w_; }

    void add(std::size_t candidate) {
        const auto g = pool_.row(candidate);
        const std::size_t pos = members_.size();
        for (std::size_t i = 0; i < pos; ++i) gram_[i].push_back(dot(pool_.row(members_[i]), g));
        std::vector<double> row(pos + 1);
        for (std::size_t i = 0; i < pos; ++i) row[i] = gram_[i][pos];
        row[pos] = dot(g, g);
        gram_.push_back(std::move(row));
        b_.push_back(dot(g, target_));
        members_.push_back(candidate);
        w_.push_back(0.0);
        in_passive_.push_back(0);
        dependent_.push_back(0);
        if (!nonnegative_) {
            if (!enter_passive(pos)) dependent_[pos] = 1;
        }
    }

    // True when every member could enter the factorisation.
    bool full_rank() const {
        return std::none_of(dependent_.begin(), dependent_.end(), [](char d) { return d != 0; });
    }

    void solve() {
        if (!nonnegative_) {
            const auto z = factor_.solve(passive_rhs());
            for (std::size_t i = 0; i < passive_.size(); ++i) w_[passive_[i]] = z[i];
            return;
        }
        lawson_hanson();
    }

    std::vector<double> residual() const {
        std::vector<double> res(target_.begin(), target_.end());
        for (std::size_t i = 0; i < members_.size(); ++i) {
            if (w_[i] == 0.0) continue;
            const auto g = pool_.row(members_[i]);
            for (std::size_t j = 0; j < res.size(); ++j) res[j] -= w_[i] * static_cast<double>(g[j]);
        }
        return res;
    }

    double error() const {
        const auto res = residual();
        double s = 0.0;
        for (double v : res) s += v * v;
        for (double v : w_) s += lambda_ * v * v;
        return std::sqrt(s);
    }

private:
    double a(std::size_t i, std::size_t j) const { return gram_[i][j] + (i == j ? lambda_ : 0.0); }

    bool enter_passive(std::size_t pos) {
        std::vector<double> col(passive_.size());
        for (std::size_t i = 0; i < passive_.size(); ++i) col[i] = a(passive_[i], pos);
        if (!factor_.append(col, a(pos, pos))) return false;
        passive_.push_back(pos);
        in_passive_[pos] = 1;
        return true;
    }

    void leave_passive(std::size_t slot) {
        in_passive_[passive_[slot]] = 0;
        w_[passive_[slot]] = 0.0;
        factor_.remove(slot);
        passive_.erase(passive_.begin() + static_cast<std::ptrdiff_t>(slot));
    }

    std::vector<double> passive_rhs() const {
        std::vector<double> rhs(passive_.size());
        for (std::size_t i = 0; i < passive_.size(); ++i) rhs[i] = b_[passive_[i]];
        return rhs;
    }

    // Half the objective gradient with respect to w_j.
    double gradient(std::size_t j) const {
        double s = -b_[j];
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] != 0.0) s += a(j, i) * w_[i];
        return s;
    }

    void lawson_hanson() {
        const std::size_t n = members_.size();
        double scale = 1.0;
        for (double v : b_) scale = std::max(scale, std::abs(v));
        const double kkt_tol = 1e-12 * scale;
        std::vector<char> blocked(n, 0);

        for (std::size_t outer = 0; outer < 3 * n + 20; ++outer) {
            std::size_t enter = n;
            double most_negative = -kkt_tol;
            for (std::size_t j = 0; j < n; ++j) {
                if (in_passive_[j] || dependent_[j] || blocked[j]) continue;
                const double g = gradient(j);
                if (g < most_negative) {
                    most_negative = g;
                    enter = j;
                }
            }
            if (enter == n) break;
            if (!enter_passive(enter)) {
                dependent_[enter] = 1;
                continue;
            }

            for (std::size_t inner = 0; inner < 3 * n + 20; ++inner) {
                const auto z = factor_.solve(passive_rhs());
                double alpha = 1.0;
                std::size_t limiting = passive_.size();
                for (std::size_t i = 0; i < passive_.size(); ++i) {
                    if (z[i] > 0.0) continue;
                    const double wi = w_[passive_[i]];
                    const double step = wi / (wi - z[i]);
                    if (limiting == passive_.size() || step < alpha) {
                        alpha = step;
                        limiting = i;
                    }
                }
                if (limiting == passive_.size()) {
                    for (std::size_t i = 0; i < passive_.size(); ++i) w_[passive_[i]] = z[i];
                    break;
                }
                for (std::size_t i = 0; i < passive_.size(); ++i) {
                    const std::size_t p = passive_[i];
                    w_[p] += alpha * (z[i] - w_[p]);
                }
                w_[passive_[limiting]] = 0.0;
                for (std::size_t i = passive_.size(); i-- > 0;) {
                    if (w_[passive_[i]] <= 0.0) {
                        if (passive_[i] == enter) blocked[enter] = 1;
                        leave_passive(i);
                    }
                }
            }
        }
    }

    FeatureView pool_;
    std::span<const double> target_;
    double lambda_;
    bool nonnegative_;

    std::vector<std::size_t> members_;
    std::vector<std::vector<double>> gram_;
    std::vector<double> b_;
    std::vector<double> w_;
    std::vector<char> in_passive_;
    std::vector<char> dependent_;
    std::vector<std::size_t> passive_;
    UpperCholesky factor_;
};

void check_target(FeatureView rows, std::span<const double> target) {
    require(target.size() == rows.dim, ErrorKind::dim_mismatch,
            "target length " + std::to_string(target.size()) + " vs feature dim " + std::to_string(rows.dim));
}

}  // namespace

void OmpConfig::validate() const {
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::invalid_argument, "lambda must be >= 0");
    require(tol >= 0.0, ErrorKind::invalid_argument, "tol must be >= 0");
    require(max_size >= 1, ErrorKind::invalid_argument, "max_size must be >= 1");
}

std::vector<std::size_t> allocate_budget(std::span<const std::size_t> cluster_sizes, std::size_t total) {
    require(!cluster_sizes.empty(), ErrorKind::invalid_argument, "no clusters");
    using u128 = unsigned __int128;
    u128 n = 0;
    for (auto s : cluster_sizes) {
        require(s >= 1, ErrorKind::invalid_argument, "cluster sizes must be >= 1");
        n += s;
    }
    require(static_cast<u128>(total) <= n, ErrorKind::invalid_argument,
            "budget " + std::to_string(total) + " exceeds sample count");

    const std::size_t k = cluster_sizes.size();
    std::vector<std::size_t> shares(k);
    std::vector<u128> remainder(k);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const u128 q = static_cast<u128>(total) * cluster_sizes[c];
        shares[c] = static_cast<std::size_t>(q / n);
        remainder[c] = q % n;
        assigned += shares[c];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
        if (cluster_sizes[a] != cluster_sizes[b]) return cluster_sizes[a] < cluster_sizes[b];
        return a < b;
    });
    for (std::size_t i = 0; assigned < total; ++i) {
        ++shares[order[i]];
        ++assigned;
    }
    return shares;
}

double matching_error(std::span<const double> weights, FeatureView subset, std::span<const double> target) {
    require(weights.size() == subset.rows, ErrorKind::length_mismatch,
            std::to_string(weights.size()) + " weights for " + std::to_string(subset.rows) + " rows");
    check_target(subset, target);
    std::vector<double> acc(target.size(), 0.0);
    for (std::size_t i = 0; i < subset.rows; ++i) {
        const auto g = subset.row(i);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += weights[i] * static_cast<double>(g[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < acc.size(); ++j) {
        const double diff = acc[j] - target[j];
        s += diff * diff;
    }
    return std::sqrt(s);
}

double regularized_error(std::span<const double> weights, FeatureView subset, std::span<const double> target,
                         double lambda) {
    const double e = matching_error(weights, subset, target);
    double ww = 0.0;
    for (double w : weights) ww += w * w;
    return std::sqrt(e * e + lambda * ww);
}

std::vector<double> solve_weights(FeatureView subset, std::span<const double> target, double lambda,
                                  bool nonnegative) {
    require(subset.rows >= 1, ErrorKind::invalid_argument, "empty subset");
    require(lambda >= 0.0, ErrorKind::invalid_argument, "lambda must be >= 0");
    check_target(subset, target);

    if (lambda == 0.0) {
        WeightSolver probe(subset, target, 0.0, false);
        for (std::size_t i = 0; i < subset.rows; ++i) probe.add(i);
        require(probe.full_rank(), ErrorKind::singular, "rank-deficient subset with lambda = 0");
    }
    WeightSolver solver(subset, target, lambda, nonnegative);
    for (std::size_t i = 0; i < subset.rows; ++i) solver.add(i);
    solver.solve();
    return solver.weights();
}

OmpResult omp_select(FeatureView candidates, std::span<const double> target, const OmpConfig& config) {
    config.validate();
    require(candidates.rows >= 1, ErrorKind::invalid_argument, "empty candidate pool");
    check_target(candidates, target);

    WeightSolver solver(candidates, target, config.lambda, config.nonnegative_weights);
    std::vector<char> selected(candidates.rows, 0);
    std::vector<double> corr(candidates.rows);
    OmpResult out;

    double err = 0.0;
    for (double v : target) err += v * v;
    err = std::sqrt(err);

    const std::size_t limit = std::min(config.max_size, candidates.rows);
    while (solver.size() < limit && err >= config.tol) {
        const auto res = solver.residual();
        parallel_for(candidates.rows, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) corr[i] = selected[i] ? 0.0 : dot(candidates.row(i), res);
        });

        // corr_j = -1/2 dObjective/dw_j at w_j = 0. Under w >= 0 only
        // positive correlations can lower the objective; if none remain the
        // pick falls back to the largest magnitude and gets a zero weight.
        std::size_t pick = candidates.rows;
        double best = 0.0;
        if (config.nonnegative_weights) {
            for (std::size_t i = 0; i < candidates.rows; ++i)
                if (!selected[i] && corr[i] > best) {
                    best = corr[i];
                    pick = i;
                }
        }
        if (pick == candidates.rows) {
            best = -1.0;
            for (std::size_t i = 0; i < candidates.rows; ++i)
                if (!selected[i] && std::abs(corr[i]) > best) {
                    best = std::abs(corr[i]);
                    pick = i;
                }
        }

        selected[pick] = 1;
        solver.add(pick);
        solver.solve();
        err = solver.error();
        out.error_trace.push_back(err);
    }

    out.indices = solver.members();
    out.weights = solver.weights();
    out.final_error = err;
    out.residual_norm = matching_error(out.weights, FeatureView(gather_rows(candidates, out.indices),
                                                                out.indices.size(), candidates.dim),
                                       target);
    return out;
}

std::vector<float> gather_rows(FeatureView features, std::span<const std::size_t> rows) {
    std::vector<float> out;
    out.reserve(rows.size() * features.dim);
    for (auto r : rows) {
        require(r < features.rows, ErrorKind::invalid_argument, "row index out of range");
        const auto row = features.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

double global_matching_error(FeatureView features, std::span<const std::size_t> indices,
                             std::span<const double> weights) {
    const auto mean = column_mean(features);
    const auto rows = gather_rows(features, indices);
    return matching_error(weights, FeatureView(rows, indices.size(), features.dim), mean);
}

SelectionResult tagcos_select(FeatureView features, const ClusterAssignment& assignment, std::size_t total_budget,
                              double lambda, double tol, bool nonnegative) {
    assignment.validate(features.rows);
    require(assignment.dim == features.dim, ErrorKind::dim_mismatch, "centroid dim differs from features");
    require(total_budget <= features.rows, ErrorKind::invalid_argument, "budget exceeds sample count");

    const auto budgets = allocate_budget(assignment.sizes, total_budget);
    std::vector<std::vector<std::size_t>> members(assignment.k);
    for (std::size_t i = 0; i < features.rows; ++i) members[assignment.labels[i]].push_back(i);

    std::vector<ClusterSelection> per_cluster(assignment.k);
    parallel_for(
        assignment.k,
        [&](std::size_t c0, std::size_t c1) {
            for (std::size_t c = c0; c < c1; ++c) {
                ClusterSelection& cs = per_cluster[c];
                cs.cluster = c;
                cs.budget = budgets[c];
                if (budgets[c] == 0) continue;
                const auto rows = gather_rows(features, members[c]);
                OmpConfig cfg{lambda, tol, budgets[c], nonnegative};
                OmpResult r = omp_select(FeatureView(rows, members[c].size(), features.dim), assignment.centroid(c), cfg);
                for (auto local : r.indices) cs.indices.push_back(members[c][local]);
                cs.weights = std::move(r.weights);
                cs.final_error = r.final_error;
                cs.residual_norm = r.residual_norm;
                cs.iterations = r.error_trace.size();
                cs.error_trace = std::move(r.error_trace);
            }
        },
        1);

    SelectionResult out;
    const double n = static_cast<double>(features.rows);
    for (auto& cs : per_cluster) {
        if (cs.budget == 0) continue;
        const double share = static_cast<double>(assignment.sizes[cs.cluster]) / n;
        for (std::size_t i = 0; i < cs.indices.size(); ++i) {
            out.indices.push_back(cs.indices[i]);
            out.weights.push_back(cs.weights[i] * share);
        }
    }
    for (auto& cs : per_cluster)
        if (cs.budget > 0) out.per_cluster.push_back(std::move(cs));
    out.global_error = global_matching_error(features, out.indices, out.weights);
    return out;
}

}  // namespace tagcos
