#include <cstring>
#include <fstream>
#include <iterator>

#include "test_util.hpp"

using namespace tagcos;
using testutil::TempDir;

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::uint64_t le(const std::vector<unsigned char>& b, std::size_t off, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    return v;
}

}  // namespace

TEST_CASE("1x2 matrix round-trips with a 22 byte header") {
    TempDir dir("fs");
    GradientFeatureMatrix m(1, 2, {1.0f, -2.0f});
    write_features(m, testutil::simple_manifest(1), dir / "a.tgcs");

    const auto bytes = slurp(dir / "a.tgcs");
    REQUIRE(bytes.size() == 22 + 8);
    CHECK(std::memcmp(bytes.data(), "TGCS", 4) == 0);
    CHECK(le(bytes, 4, 4) == 1);   // version
    CHECK(le(bytes, 8, 8) == 1);   // n
    CHECK(le(bytes, 16, 4) == 2);  // dim
    CHECK(bytes[20] == 1);         // float32
    CHECK(bytes[21] == 1);         // checkpoints
    // payload is IEEE-754 little-endian
    CHECK(le(bytes, 22, 4) == 0x3f800000u);
    CHECK(le(bytes, 26, 4) == 0xc0000000u);

    const FeatureFile back = read_features(dir / "a.tgcs");
    CHECK(back.matrix == m);
    CHECK(back.manifest == testutil::simple_manifest(1));
}

TEST_CASE("random matrices round-trip bit-exactly") {
    TempDir dir("fs");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::size_t n = 3 + seed * 7, d = 1 + seed * 5;
        auto data = testutil::random_floats(n * d, seed, 1e3);
        data[0] = -0.0f;
        data[n * d - 1] = std::numeric_limits<float>::denorm_min();
        GradientFeatureMatrix m(n, d, data, static_cast<std::uint32_t>(seed + 1));
        write_features(m, testutil::simple_manifest(n, 100), dir / "r.tgcs");
        const FeatureFile back = read_features(dir / "r.tgcs");
        REQUIRE(back.matrix.data().size() == data.size());
        CHECK(std::memcmp(back.matrix.data().data(), data.data(), data.size() * sizeof(float)) == 0);
        CHECK(back.matrix.checkpoint_count() == seed + 1);
    }
}

TEST_CASE("zero matrix reads back as zeros") {
    TempDir dir("fs");
    write_features(GradientFeatureMatrix(5, 3, std::vector<float>(15, 0.0f)), testutil::simple_manifest(5),
                   dir / "z.tgcs");
    const FeatureFile back = read_features(dir / "z.tgcs");
    CHECK(back.matrix.n_samples() == 5);
    CHECK(back.matrix.dim() == 3);
    for (float x : back.matrix.data()) CHECK(x == 0.0f);
}

TEST_CASE("non-finite entries are rejected and nothing is written") {
    TempDir dir("fs");
    GradientFeatureMatrix nan_m(2, 2, {1.0f, std::numeric_limits<float>::quiet_NaN(), 0.0f, 1.0f});
    CHECK_ERROR_KIND(write_features(nan_m, testutil::simple_manifest(2), dir / "n.tgcs"), ErrorKind::non_finite);
    CHECK_FALSE(std::filesystem::exists(dir / "n.tgcs"));
    CHECK_FALSE(std::filesystem::exists(manifest_path_for(dir / "n.tgcs")));

    GradientFeatureMatrix inf_m(1, 1, {std::numeric_limits<float>::infinity()});
    CHECK_ERROR_KIND(inf_m.validate(), ErrorKind::non_finite);

    // a NaN patched into a valid file is caught on read
    GradientFeatureMatrix ok(1, 2, {1.0f, 2.0f});
    write_features(ok, testutil::simple_manifest(1), dir / "p.tgcs");
    auto bytes = slurp(dir / "p.tgcs");
    bytes[22 + 4 + 3] = 0x7f;
    bytes[22 + 4 + 2] = 0xc0;
    dump(dir / "p.tgcs", bytes);
    CHECK_ERROR_KIND(read_features(dir / "p.tgcs"), ErrorKind::non_finite);
}

TEST_CASE("shape and manifest mismatches") {
    CHECK_ERROR_KIND(GradientFeatureMatrix(2, 2, std::vector<float>(3)), ErrorKind::length_mismatch);
    CHECK_ERROR_KIND(GradientFeatureMatrix(0, 2, {}), ErrorKind::invalid_argument);
    TempDir dir("fs");
    CHECK_ERROR_KIND(write_features(GradientFeatureMatrix(2, 1, {1.0f, 2.0f}), testutil::simple_manifest(3),
                                    dir / "m.tgcs"),
                     ErrorKind::length_mismatch);
    SampleManifest dup = testutil::simple_manifest(2);
    dup.records[1].sample_id = dup.records[0].sample_id;
    CHECK_ERROR_KIND(dup.validate(), ErrorKind::id_collision);
}

TEST_CASE("bad magic, version and truncation") {
    TempDir dir("fs");
    GradientFeatureMatrix m(2, 3, testutil::random_floats(6, 1));
    write_features(m, testutil::simple_manifest(2), dir / "f.tgcs");
    const auto good = slurp(dir / "f.tgcs");

    auto bad = good;
    std::memcpy(bad.data(), "XXXX", 4);
    dump(dir / "f.tgcs", bad);
    CHECK_ERROR_KIND(read_features(dir / "f.tgcs"), ErrorKind::bad_magic);

    bad = good;
    bad[4] = 2;
    dump(dir / "f.tgcs", bad);
    CHECK_ERROR_KIND(read_features(dir / "f.tgcs"), ErrorKind::version_mismatch);

    bad = good;
    bad.resize(bad.size() - 4);  // one float short
    dump(dir / "f.tgcs", bad);
    CHECK_ERROR_KIND(read_features(dir / "f.tgcs"), ErrorKind::truncated);

    bad = good;
    bad.resize(10);
    dump(dir / "f.tgcs", bad);
    CHECK_ERROR_KIND(read_features(dir / "f.tgcs"), ErrorKind::truncated);

    CHECK_ERROR_KIND(read_features(dir / "missing.tgcs"), ErrorKind::io);
}

TEST_CASE("concat keeps argument order and rejects bad inputs") {
    TempDir dir("fs");
    GradientFeatureMatrix a(2, 4, testutil::random_floats(8, 1));
    GradientFeatureMatrix b(3, 4, testutil::random_floats(12, 2));
    GradientFeatureMatrix c(2, 5, testutil::random_floats(10, 3));
    write_features(a, testutil::simple_manifest(2, 0, "A"), dir / "a.tgcs");
    write_features(b, testutil::simple_manifest(3, 10, "B"), dir / "b.tgcs");
    write_features(c, testutil::simple_manifest(2, 20, "C"), dir / "c.tgcs");

    const std::vector<std::filesystem::path> ab{dir / "a.tgcs", dir / "b.tgcs"};
    const FeatureFile joined = concat_feature_files(ab);
    REQUIRE(joined.matrix.n_samples() == 5);
    CHECK(joined.matrix.dim() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(joined.matrix.row(0)[j] == a.row(0)[j]);
        CHECK(joined.matrix.row(1)[j] == a.row(1)[j]);
        CHECK(joined.matrix.row(4)[j] == b.row(2)[j]);
    }
    CHECK(joined.manifest.records[0].source_dataset == "A");
    CHECK(joined.manifest.records[2].sample_id == 10);

    const std::vector<std::filesystem::path> ac{dir / "a.tgcs", dir / "c.tgcs"};
    CHECK_ERROR_KIND(concat_feature_files(ac), ErrorKind::dim_mismatch);
    const std::vector<std::filesystem::path> aa{dir / "a.tgcs", dir / "a.tgcs"};
    CHECK_ERROR_KIND(concat_feature_files(aa), ErrorKind::id_collision);
    CHECK_ERROR_KIND(concat_feature_files({}), ErrorKind::usage);
}

TEST_CASE("manifest sidecar keeps null scores and tags") {
    TempDir dir("fs");
    SampleManifest m;
    m.records.push_back({42, "alpaca", std::nullopt});
    m.records.push_back({-7, "dolly \"quoted\"", 1.25});
    write_manifest(m, dir / "m.jsonl");
    CHECK(read_manifest(dir / "m.jsonl") == m);

    std::ifstream in(dir / "m.jsonl");
    std::string line;
    std::getline(in, line);
    CHECK(line.find("\"score\":null") != std::string::npos);
    CHECK(line.find("\"sample_id\":42") != std::string::npos);
}

TEST_CASE("streaming reader and writer agree with whole-file IO") {
    TempDir dir("fs");
    const std::size_t n = 17, d = 9;
    GradientFeatureMatrix m(n, d, testutil::random_floats(n * d, 4), 3);
    {
        FeatureWriter w(dir / "s.tgcs", n, d, 3);
        for (std::size_t i = 0; i < n; ++i) w.write_row(m.row(i));
        w.finish();
    }
    write_manifest(testutil::simple_manifest(n), manifest_path_for(dir / "s.tgcs"));
    CHECK(read_features(dir / "s.tgcs").matrix == m);

    FeatureReader r(dir / "s.tgcs");
    CHECK(r.header().n_samples == n);
    CHECK(r.header().checkpoint_count == 3);
    std::vector<float> row(d);
    std::size_t count = 0;
    while (r.read_row(row)) {
        for (std::size_t j = 0; j < d; ++j) CHECK(row[j] == m.row(count)[j]);
        ++count;
    }
    CHECK(count == n);

    FeatureWriter short_writer(dir / "t.tgcs", 2, d, 1);
    short_writer.write_row(m.row(0));
    CHECK_ERROR_KIND(short_writer.finish(), ErrorKind::length_mismatch);
}
