#include <cstring>

#include "tagcos/gradient_geometry.hpp"
#include "tagcos/parallel.hpp"
#include "test_util.hpp"

using namespace tagcos;

namespace {

// Reference written directly from the update rules, in long double, with
// the bias corrections computed by repeated multiplication.
std::vector<double> reference_adam(const std::vector<double>& g, const std::vector<double>& m,
                                   const std::vector<double>& v, unsigned t, double b1, double b2, double eps) {
    long double b1t = 1.0L, b2t = 1.0L;
    for (unsigned i = 0; i < t; ++i) {
        b1t *= b1;
        b2t *= b2;
    }
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const long double mi = (b1 * (long double)m[i] + (1.0L - b1) * g[i]) / (1.0L - b1t);
        const long double vi = (b2 * (long double)v[i] + (1.0L - b2) * (long double)g[i] * g[i]) / (1.0L - b2t);
        out[i] = static_cast<double>(mi / (std::sqrt(vi) + eps));
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("adam at t=1 cancels the bias correction") {
    AdamState s{{0.0}, {0.0}};
    const std::vector<double> g{4.0};
    const auto out = adam_direction(g, s);
    CHECK(out[0] == doctest::Approx(4.0 / (4.0 + 1e-8)).epsilon(1e-15));
    CHECK(out[0] < 1.0);
}

TEST_CASE("adam of a zero gradient with zero moments is zero") {
    AdamState s{std::vector<double>(5, 0.0), std::vector<double>(5, 0.0)};
    for (double x : adam_direction(std::vector<double>(5, 0.0), s)) CHECK(x == 0.0);
}

TEST_CASE("adam matches an independent reference at t=3") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t p = 64;
        auto g = testutil::random_doubles(p, seed);
        auto m = testutil::random_doubles(p, seed + 100, 0.1);
        auto v = testutil::random_doubles(p, seed + 200, 0.1);
        for (auto& x : v) x = x * x;
        AdamState s{m, v, 3, 0.9, 0.999, 1e-8};
        const auto got = adam_direction(g, s);
        const auto want = reference_adam(g, m, v, 3, 0.9, 0.999, 1e-8);
        for (std::size_t i = 0; i < p; ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        // inputs untouched
        CHECK(s.m == m);
        CHECK(s.v == v);
    }
}

TEST_CASE("adam with fresh moments at t=1 stays inside (-1, 1)") {
    const auto g = testutil::random_doubles(200, 9, 50.0);
    AdamState s{std::vector<double>(200, 0.0), std::vector<double>(200, 0.0)};
    const auto out = adam_direction(g, s);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(out[i]) < 1.0);
        CHECK(out[i] == doctest::Approx(g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-12));
    }
}

TEST_CASE("adam rejects bad input") {
    AdamState s{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_ERROR_KIND(adam_direction(std::vector<double>{1.0}, s), ErrorKind::length_mismatch);
    CHECK_ERROR_KIND(adam_direction(std::vector<double>{1.0, NAN}, s), ErrorKind::non_finite);
    AdamState neg{{0.0}, {-1.0}};
    CHECK_ERROR_KIND(adam_direction(std::vector<double>{1.0}, neg), ErrorKind::invalid_argument);
    AdamState bad_beta{{0.0}, {0.0}, 1, 1.0};
    CHECK_ERROR_KIND(adam_direction(std::vector<double>{1.0}, bad_beta), ErrorKind::invalid_argument);
}

TEST_CASE("projection of zero is zero") {
    for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
        ProjectionSpec spec{300, 70, seed};
        for (double x : rademacher_project(std::vector<double>(300, 0.0), spec)) CHECK(x == 0.0);
    }
}

TEST_CASE("identity hook gives grad / sqrt(d)") {
    const auto g = testutil::random_doubles(16, 3);
    ProjectionSpec spec{16, 16, 0, true};
    const auto out = rademacher_project(g, spec);
    for (std::size_t i = 0; i < 16; ++i) CHECK(out[i] == doctest::Approx(g[i] / 4.0).epsilon(1e-15));
}

TEST_CASE("projection equals the explicitly materialised sign matrix") {
    const std::size_t p = 150, d = 70;  // d not a multiple of the 64-column block
    ProjectionSpec spec{p, d, 99};
    const auto g = testutil::random_doubles(p, 5);
    const auto out = rademacher_project(g, spec);
    long plus = 0;
    for (std::size_t col = 0; col < d; ++col) {
        double s = 0.0;
        for (std::size_t row = 0; row < p; ++row) {
            const int sign = rademacher_sign(spec, row, col);
            REQUIRE((sign == 1 || sign == -1));
            plus += sign == 1;
            s += sign * g[row];
        }
        CHECK(out[col] == doctest::Approx(s / std::sqrt(double(d))).epsilon(1e-12));
    }
    // 10500 fair coin flips; 5 sigma is about 256
    CHECK(std::abs(plus - long(p * d / 2)) < 260);
}

TEST_CASE("projection is deterministic across runs and thread counts") {
    ProjectionSpec spec{1000, 300, 7};
    const auto g = testutil::random_doubles(1000, 1);
    set_thread_count(1);
    const auto a = rademacher_project(g, spec);
    set_thread_count(4);
    const auto b = rademacher_project(g, spec);
    set_thread_count(0);
    const auto c = rademacher_project(g, spec);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) == 0);

    ProjectionSpec other = spec;
    other.seed = 8;
    CHECK(rademacher_project(g, other) != a);
}

TEST_CASE("projection is linear") {
    ProjectionSpec spec{512, 128, 3};
    const auto a = testutil::random_doubles(512, 10);
    const auto b = testutil::random_doubles(512, 11);
    const double alpha = 1.7, beta = -0.3;
    std::vector<double> mix(512);
    for (std::size_t i = 0; i < 512; ++i) mix[i] = alpha * a[i] + beta * b[i];
    const auto pa = rademacher_project(a, spec), pb = rademacher_project(b, spec), pm = rademacher_project(mix, spec);
    for (std::size_t j = 0; j < 128; ++j)
        CHECK(pm[j] == doctest::Approx(alpha * pa[j] + beta * pb[j]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("float and double inputs agree") {
    const auto f = testutil::random_floats(200, 2);
    std::vector<double> d(f.begin(), f.end());
    ProjectionSpec spec{200, 40, 1};
    CHECK(rademacher_project(std::span<const float>(f), spec) == rademacher_project(std::span<const double>(d), spec));
}

TEST_CASE("projected inner products are unbiased (Monte-Carlo, 5% band)") {
    const std::size_t p = 4096, d = 256;
    const auto a = testutil::random_doubles(p, 21);
    auto b = testutil::random_doubles(p, 22);
    for (std::size_t i = 0; i < p; ++i) b[i] = 0.6 * a[i] + 0.8 * b[i];  // correlated pair
    const double exact = dot(a, b);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        ProjectionSpec spec{p, d, seed};
        mean += dot(rademacher_project(a, spec), rademacher_project(b, spec));
    }
    mean /= 200.0;
    CHECK(std::abs(mean - exact) < 0.05 * std::abs(exact));
}

TEST_CASE("projection rejects bad specs") {
    CHECK_ERROR_KIND(rademacher_project(std::vector<double>(5), ProjectionSpec{4, 2, 0}), ErrorKind::length_mismatch);
    CHECK_ERROR_KIND(rademacher_project(std::vector<double>(4), ProjectionSpec{4, 8, 0}), ErrorKind::invalid_argument);
    CHECK_ERROR_KIND(rademacher_project(std::vector<double>(8), ProjectionSpec{8, 4, 0, true}),
                     ErrorKind::invalid_argument);
}

TEST_CASE("combine_checkpoints") {
    GradientFeatureMatrix x(4, 8, testutil::random_floats(32, 1));

    SUBCASE("single matrix is unchanged") {
        const std::vector<GradientFeatureMatrix> one{x};
        const auto out = combine_checkpoints(one);
        CHECK(out == x);
        CHECK(out.checkpoint_count() == 1);
    }
    SUBCASE("X and -X cancel") {
        std::vector<float> neg(x.data().begin(), x.data().end());
        for (auto& v : neg) v = -v;
        const std::vector<GradientFeatureMatrix> pair{x, GradientFeatureMatrix(4, 8, neg)};
        const auto out = combine_checkpoints(pair);
        for (float v : out.data()) CHECK(v == 0.0f);
        CHECK(out.checkpoint_count() == 2);
    }
    SUBCASE("three matrices average elementwise") {
        const std::vector<GradientFeatureMatrix> three{x, GradientFeatureMatrix(4, 8, testutil::random_floats(32, 2)),
                                                       GradientFeatureMatrix(4, 8, testutil::random_floats(32, 3))};
        const auto out = combine_checkpoints(three);
        CHECK(out.checkpoint_count() == 3);
        for (std::size_t i = 0; i < 32; ++i) {
            const double want = (double(three[0].data()[i]) + three[1].data()[i] + three[2].data()[i]) / 3.0;
            CHECK(out.data()[i] == doctest::Approx(want).epsilon(1e-7).scale(1.0));
        }
    }
    SUBCASE("shape mismatch and empty list") {
        const std::vector<GradientFeatureMatrix> bad{x, GradientFeatureMatrix(4, 7, std::vector<float>(28))};
        CHECK_ERROR_KIND(combine_checkpoints(bad), ErrorKind::dim_mismatch);
        CHECK_ERROR_KIND(combine_checkpoints({}), ErrorKind::invalid_argument);
    }
}
