#include <algorithm>
#include <limits>
#include <set>

#include "tagcos/baselines.hpp"
#include "tagcos/clustering.hpp"
#include "tagcos/parallel.hpp"
#include "tagcos/selection.hpp"
#include "test_util.hpp"

using namespace tagcos;

namespace {

SampleManifest scored(const std::vector<double>& scores) {
    SampleManifest m;
    for (std::size_t i = 0; i < scores.size(); ++i) m.records.push_back({std::int64_t(i), "s", scores[i]});
    return m;
}

double euclid(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (double(a[j]) - b[j]) * (double(a[j]) - b[j]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("uniform_select") {
    auto all = uniform_select(5, 5, 3);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});

    const auto a = uniform_select(1'000'000, 53'427, 7);
    const auto b = uniform_select(1'000'000, 53'427, 7);
    CHECK(a == b);
    CHECK(a.size() == 53'427);
    std::set<std::size_t> uniq(a.begin(), a.end());
    CHECK(uniq.size() == a.size());
    CHECK(*uniq.rbegin() < 1'000'000);
    CHECK(uniform_select(1'000'000, 53'427, 8) != a);

    CHECK(uniform_select(10, 0, 1).empty());
    CHECK_ERROR_KIND(uniform_select(3, 4, 0), ErrorKind::invalid_argument);
}

TEST_CASE("uniform_select hits every index equally often") {
    // n=10, budget 3 over 20000 seeds: each index expected 6000 times
    std::vector<int> hits(10, 0);
    for (std::uint64_t s = 0; s < 20000; ++s)
        for (auto i : uniform_select(10, 3, s)) ++hits[i];
    // binomial sd = sqrt(20000 * 0.3 * 0.7) ~ 65; allow 5 sd
    for (int h : hits) CHECK(std::abs(h - 6000) < 325);
}

TEST_CASE("score_rank_select") {
    CHECK(score_rank_select(scored({3, 1, 2}), 1, ScoreDirection::lowest) == std::vector<std::size_t>{1});
    CHECK(score_rank_select(scored({3, 1, 2}), 1, ScoreDirection::highest) == std::vector<std::size_t>{0});
    CHECK(score_rank_select(scored({2, 2, 1}), 2, ScoreDirection::highest) == std::vector<std::size_t>{0, 1});

    // ties resolve by sample_id, not by row position
    SampleManifest m = scored({5, 5, 5});
    m.records[0].sample_id = 30;
    m.records[1].sample_id = 10;
    m.records[2].sample_id = 20;
    CHECK(score_rank_select(m, 2, ScoreDirection::lowest) == std::vector<std::size_t>{1, 2});

    SampleManifest missing = scored({1, 2});
    missing.records[1].score.reset();
    CHECK_ERROR_KIND(score_rank_select(missing, 1, ScoreDirection::lowest), ErrorKind::invalid_argument);
    CHECK_ERROR_KIND(score_rank_select(scored({1}), 2, ScoreDirection::lowest), ErrorKind::invalid_argument);
}

TEST_CASE("kcenter greedy picks the farthest point") {
    const std::vector<float> line{0, 1, 10};
    const auto r = kcenter_greedy_from(FeatureView(line, 3, 1), 2, 0);
    CHECK(r.indices == std::vector<std::size_t>{0, 2});
    CHECK(r.covering_radius == doctest::Approx(1.0));
    CHECK(std::isinf(r.min_distance_trace[0]));
    CHECK(r.min_distance_trace[1] == doctest::Approx(10.0));

    auto all = kcenter_greedy(FeatureView(line, 3, 1), 3, 5).indices;
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::size_t>{0, 1, 2});
    CHECK_ERROR_KIND(kcenter_greedy(FeatureView(line, 3, 1), 4, 0), ErrorKind::invalid_argument);
}

TEST_CASE("kcenter greedy radius matches a brute-force recomputation") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t n = 50, d = 4;
        const auto data = testutil::random_floats(n * d, s);
        FeatureView x(data, n, d);
        const auto r = kcenter_greedy(x, 5, s);
        CHECK(r.indices.size() == 5);
        std::set<std::size_t> uniq(r.indices.begin(), r.indices.end());
        CHECK(uniq.size() == 5);

        double radius = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (auto c : r.indices) m = std::min(m, euclid(x.row(i), x.row(c)));
            radius = std::max(radius, m);
        }
        CHECK(r.covering_radius == doctest::Approx(radius).epsilon(1e-12));
        CHECK(covering_radius(x, r.indices) == doctest::Approx(radius).epsilon(1e-12));

        // each pick is the farthest remaining point from the previous picks
        for (std::size_t p = 1; p < r.indices.size(); ++p) {
            double far = -1;
            for (std::size_t i = 0; i < n; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t q = 0; q < p; ++q) m = std::min(m, euclid(x.row(i), x.row(r.indices[q])));
                far = std::max(far, m);
            }
            CHECK(r.min_distance_trace[p] == doctest::Approx(far).epsilon(1e-12));
            if (p > 1) CHECK(r.min_distance_trace[p] <= r.min_distance_trace[p - 1]);
        }
        CHECK(kcenter_greedy(x, 5, s).indices == r.indices);
    }
}

TEST_CASE("kcenter greedy on duplicate points still returns distinct indices") {
    const std::vector<float> same(8, 2.0f);
    const auto r = kcenter_greedy(FeatureView(same, 4, 2), 4, 1);
    std::set<std::size_t> uniq(r.indices.begin(), r.indices.end());
    CHECK(uniq.size() == 4);
    CHECK(r.covering_radius == 0.0);
}

TEST_CASE("global_omp_select") {
    SUBCASE("equals tagcos_select on a single cluster") {
        const std::size_t n = 150, d = 9;
        const auto data = testutil::random_floats(n * d, 3);
        FeatureView x(data, n, d);
        const auto g = global_omp_select(x, 12, 1e-4, 1e-3, true);
        const auto t = tagcos_select(x, kmeans(x, {1, 0}), 12, 1e-4, 1e-3, true);
        CHECK(g == t);
    }
    SUBCASE("repeated vector needs one pick") {
        std::vector<float> rep;
        for (int i = 0; i < 6; ++i) rep.insert(rep.end(), {1.5f, -2.0f, 0.5f});
        const auto g = global_omp_select(FeatureView(rep, 6, 3), 4, 0.0, 1e-9, true);
        CHECK(g.indices.size() == 1);
        CHECK(g.global_error == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("budget beyond n is rejected") {
        const std::vector<float> one{1.0f};
        CHECK_ERROR_KIND(global_omp_select(FeatureView(one, 1, 1), 2), ErrorKind::invalid_argument);
    }
}

TEST_CASE("unweighted results report the subset-mean error") {
    const std::vector<float> pts{0, 0, 2, 0, 0, 2, 2, 2};
    FeatureView x(pts, 4, 2);
    const auto r = unweighted_result(x, {0, 3});
    CHECK(r.weights == std::vector<double>{0.5, 0.5});
    CHECK(r.global_error == doctest::Approx(0.0).scale(1.0));
    const auto r2 = unweighted_result(x, {0});
    CHECK(r2.global_error == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("method names") {
    for (auto m : {BaselineMethod::uniform, BaselineMethod::hardest, BaselineMethod::lowest_score,
                   BaselineMethod::kcenter_greedy, BaselineMethod::global_omp})
        CHECK(parse_baseline_method(to_string(m)) == m);
    CHECK(parse_baseline_method("perplexity") == BaselineMethod::lowest_score);
    CHECK_ERROR_KIND(parse_baseline_method("bert_kcenter"), ErrorKind::usage);
}
