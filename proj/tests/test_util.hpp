#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "tagcos/error.hpp"
#include "tagcos/feature_store.hpp"
#include "tagcos/random.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("tagcos_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::vector<float> random_floats(std::size_t count, std::uint64_t seed, double scale = 1.0) {
    tagcos::CounterRng rng(seed, 77);
    std::vector<float> out(count);
    for (auto& x : out) x = static_cast<float>(scale * rng.normal());
    return out;
}

inline std::vector<double> random_doubles(std::size_t count, std::uint64_t seed, double scale = 1.0) {
    tagcos::CounterRng rng(seed, 78);
    std::vector<double> out(count);
    for (auto& x : out) x = scale * rng.normal();
    return out;
}

inline tagcos::SampleManifest simple_manifest(std::size_t n, std::int64_t first_id = 0,
                                              const std::string& source = "src") {
    tagcos::SampleManifest m;
    for (std::size_t i = 0; i < n; ++i)
        m.records.push_back({first_id + static_cast<std::int64_t>(i), source, static_cast<double>(i)});
    return m;
}

// Naive double-precision ||sum_i w_i x_i - t||.
inline double naive_error(const std::vector<double>& w, tagcos::FeatureView rows, const std::vector<double>& t) {
    double s = 0.0;
    for (std::size_t j = 0; j < rows.dim; ++j) {
        double acc = -t[j];
        for (std::size_t i = 0; i < rows.rows; ++i) acc += w[i] * static_cast<double>(rows.row(i)[j]);
        s += acc * acc;
    }
    return std::sqrt(s);
}

}  // namespace testutil

#define CHECK_ERROR_KIND(expr, expected_kind)                                   \
    do {                                                                        \
        bool thrown_ = false;                                                   \
        try {                                                                   \
            (void)(expr);                                                       \
        } catch (const tagcos::Error& e_) {                                     \
            thrown_ = true;                                                     \
            CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());             \
        }                                                                       \
        CHECK_MESSAGE(thrown_, "expected tagcos::Error from " #expr);           \
    } while (0)
