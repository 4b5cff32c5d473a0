#include "tagcos/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tagcos/error.hpp"

namespace tagcos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
    return static_cast<T>(u);
}

std::string encode_header(const FeatureFileHeader& h) {
    std::string buf(kFeatureMagic, kFeatureMagic + 4);
    put_le<std::uint32_t>(buf, h.format_version);
    put_le<std::uint64_t>(buf, h.n_samples);
    put_le<std::uint32_t>(buf, h.dim);
    put_le<std::uint8_t>(buf, h.dtype_code);
    put_le<std::uint8_t>(buf, h.checkpoint_count);
    return buf;
}

FeatureFileHeader decode_header(std::istream& in, const fs::path& path) {
    unsigned char raw[kFeatureHeaderBytes];
    in.read(reinterpret_cast<char*>(raw), kFeatureHeaderBytes);
    if (in.gcount() < 4 || std::memcmp(raw, kFeatureMagic, 4) != 0)
        throw Error(ErrorKind::bad_magic, path.string());
    if (static_cast<std::size_t>(in.gcount()) != kFeatureHeaderBytes)
        throw Error(ErrorKind::truncated, path.string() + ": short header");
    FeatureFileHeader h;
    h.format_version = get_le<std::uint32_t>(raw + 4);
    h.n_samples = get_le<std::uint64_t>(raw + 8);
    h.dim = get_le<std::uint32_t>(raw + 16);
    h.dtype_code = raw[20];
    h.checkpoint_count = raw[21];
    if (h.format_version != kFeatureFormatVersion)
        throw Error(ErrorKind::version_mismatch,
                    path.string() + ": version " + std::to_string(h.format_version));
    if (h.dtype_code != kDtypeFloat32)
        throw Error(ErrorKind::version_mismatch,
                    path.string() + ": dtype code " + std::to_string(h.dtype_code));
    if (h.n_samples == 0 || h.dim == 0)
        throw Error(ErrorKind::invalid_argument, path.string() + ": empty matrix");
    return h;
}

void write_floats_le(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        std::string buf;
        buf.reserve(values.size() * 4);
        for (float v : values) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void fix_endian(std::span<float> values) {
    if constexpr (std::endian::native != std::endian::little) {
        for (float& v : values) {
            unsigned char b[4];
            std::memcpy(b, &v, 4);
            v = std::bit_cast<float>(get_le<std::uint32_t>(b));
        }
    }
}

void check_finite(std::span<const float> values, const std::string& where) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw Error(ErrorKind::non_finite, where + " (flat index " + std::to_string(i) + ")");
}

}  // namespace

FeatureView::FeatureView(std::span<const float> values, std::size_t n_rows, std::size_t n_cols)
    : data(values), rows(n_rows), dim(n_cols) {
    require(values.size() == n_rows * n_cols, ErrorKind::length_mismatch, "feature view size");
}

GradientFeatureMatrix::GradientFeatureMatrix(std::size_t n_samples, std::size_t dim,
                                             std::vector<float> data,
                                             std::uint32_t checkpoint_count)
    : n_samples_(n_samples), dim_(dim), checkpoint_count_(checkpoint_count), data_(std::move(data)) {
    require(n_samples >= 1 && dim >= 1, ErrorKind::invalid_argument, "matrix must be at least 1x1");
    require(data_.size() == n_samples * dim, ErrorKind::length_mismatch,
            "data length " + std::to_string(data_.size()) + " != " + std::to_string(n_samples) + "x" +
                std::to_string(dim));
    require(checkpoint_count >= 1, ErrorKind::invalid_argument, "checkpoint_count must be >= 1");
}

void GradientFeatureMatrix::validate() const {
    require(n_samples_ >= 1 && dim_ >= 1, ErrorKind::invalid_argument, "matrix must be at least 1x1");
    require(data_.size() == n_samples_ * dim_, ErrorKind::length_mismatch, "data length");
    check_finite(data_, "feature matrix");
}

void SampleManifest::validate() const {
    std::unordered_set<std::int64_t> seen;
    seen.reserve(records.size());
    for (const auto& r : records)
        if (!seen.insert(r.sample_id).second)
            throw Error(ErrorKind::id_collision, "sample_id " + std::to_string(r.sample_id));
}

fs::path manifest_path_for(const fs::path& feature_path) {
    return fs::path(feature_path.string() + ".manifest.jsonl");
}

void write_manifest(const SampleManifest& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot open " + path.string());
    for (const auto& r : manifest.records) {
        json j;
        j["sample_id"] = r.sample_id;
        j["source_dataset"] = r.source_dataset;
        j["score"] = r.score ? json(*r.score) : json(nullptr);
        out << j.dump() << '\n';
    }
    require(out.good(), ErrorKind::io, "write failed " + path.string());
}

SampleManifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open manifest " + path.string());
    SampleManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ManifestRecord r;
            r.sample_id = j.at("sample_id").get<std::int64_t>();
            r.source_dataset = j.at("source_dataset").get<std::string>();
            const auto& s = j.at("score");
            if (!s.is_null()) r.score = s.get<double>();
            m.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::schema_mismatch,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    m.validate();
    return m;
}

void write_features(const GradientFeatureMatrix& matrix, const SampleManifest& manifest,
                    const fs::path& path) {
    matrix.validate();
    manifest.validate();
    require(manifest.size() == matrix.n_samples(), ErrorKind::length_mismatch,
            "manifest has " + std::to_string(manifest.size()) + " records, matrix has " +
                std::to_string(matrix.n_samples()) + " rows");
    require(matrix.dim() <= UINT32_MAX, ErrorKind::invalid_argument, "dim exceeds u32");
    require(matrix.checkpoint_count() <= UINT8_MAX, ErrorKind::invalid_argument,
            "checkpoint_count exceeds u8");

    FeatureWriter writer(path, matrix.n_samples(), static_cast<std::uint32_t>(matrix.dim()),
                         static_cast<std::uint8_t>(matrix.checkpoint_count()));
    const auto view = matrix.view();
    for (std::size_t i = 0; i < view.rows; ++i) writer.write_row(view.row(i));
    writer.finish();
    write_manifest(manifest, manifest_path_for(path));
}

FeatureFile read_features(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    const FeatureFileHeader h = decode_header(in, path);

    const std::uint64_t expected = h.n_samples * static_cast<std::uint64_t>(h.dim);
    const auto file_size = fs::file_size(path);
    const std::uint64_t payload = file_size - kFeatureHeaderBytes;
    if (payload < expected * sizeof(float))
        throw Error(ErrorKind::truncated, path.string() + ": payload holds " +
                                              std::to_string(payload / sizeof(float)) + " of " +
                                              std::to_string(expected) + " floats");
    if (payload > expected * sizeof(float))
        throw Error(ErrorKind::schema_mismatch, path.string() + ": trailing bytes after payload");

    std::vector<float> data(expected);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected * sizeof(float)));
    require(in.good(), ErrorKind::truncated, path.string());
    fix_endian(data);
    check_finite(data, path.string());

    FeatureFile out{GradientFeatureMatrix(h.n_samples, h.dim, std::move(data), h.checkpoint_count),
                    read_manifest(manifest_path_for(path))};
    require(out.manifest.size() == out.matrix.n_samples(), ErrorKind::length_mismatch,
            path.string() + ": manifest/matrix row count differ");
    return out;
}

FeatureFile concat_feature_files(std::span<const fs::path> paths) {
    require(!paths.empty(), ErrorKind::usage, "no feature files given");
    std::vector<FeatureFile> parts;
    parts.reserve(paths.size());
    for (const auto& p : paths) parts.push_back(read_features(p));

    const std::size_t dim = parts.front().matrix.dim();
    const std::uint32_t ckpt = parts.front().matrix.checkpoint_count();
    std::size_t rows = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& m = parts[i].matrix;
        if (m.dim() != dim)
            throw Error(ErrorKind::dim_mismatch, paths[i].string() + ": dim " + std::to_string(m.dim()) +
                                                     " vs " + std::to_string(dim));
        if (m.checkpoint_count() != ckpt)
            throw Error(ErrorKind::dim_mismatch, paths[i].string() + ": checkpoint_count differs");
        rows += m.n_samples();
    }

    std::vector<float> data;
    data.reserve(rows * dim);
    SampleManifest manifest;
    manifest.records.reserve(rows);
    for (auto& part : parts) {
        auto d = part.matrix.data();
        data.insert(data.end(), d.begin(), d.end());
        for (auto& r : part.manifest.records) manifest.records.push_back(std::move(r));
    }
    manifest.validate();
    return {GradientFeatureMatrix(rows, dim, std::move(data), ckpt), std::move(manifest)};
}

FeatureReader::FeatureReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    require(in_.good(), ErrorKind::io, "cannot open " + path.string());
    header_ = decode_header(in_, path);
}

bool FeatureReader::read_row(std::span<float> out) {
    require(out.size() == header_.dim, ErrorKind::length_mismatch, "row buffer size");
    if (next_row_ >= header_.n_samples) return false;
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * sizeof(float)));
    if (static_cast<std::size_t>(in_.gcount()) != out.size() * sizeof(float))
        throw Error(ErrorKind::truncated, path_.string() + ": row " + std::to_string(next_row_));
    fix_endian(out);
    check_finite(out, path_.string() + " row " + std::to_string(next_row_));
    ++next_row_;
    return true;
}

FeatureWriter::FeatureWriter(const fs::path& path, std::uint64_t n_samples, std::uint32_t dim,
                             std::uint8_t checkpoint_count)
    : path_(path), n_samples_(n_samples), dim_(dim) {
    require(n_samples >= 1 && dim >= 1, ErrorKind::invalid_argument, "matrix must be at least 1x1");
    out_.open(path, std::ios::binary | std::ios::trunc);
    require(out_.good(), ErrorKind::io, "cannot open " + path.string() + " for writing");
    FeatureFileHeader h;
    h.n_samples = n_samples;
    h.dim = dim;
    h.checkpoint_count = checkpoint_count;
    const std::string header = encode_header(h);
    out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

void FeatureWriter::write_row(std::span<const float> row) {
    require(row.size() == dim_, ErrorKind::length_mismatch, "row size");
    require(rows_written_ < n_samples_, ErrorKind::invalid_argument, "too many rows");
    check_finite(row, "row " + std::to_string(rows_written_));
    write_floats_le(out_, row);
    ++rows_written_;
}

void FeatureWriter::finish() {
    require(rows_written_ == n_samples_, ErrorKind::length_mismatch,
            "wrote " + std::to_string(rows_written_) + " of " + std::to_string(n_samples_) + " rows");
    out_.flush();
    require(out_.good(), ErrorKind::io, "write failed " + path_.string());
    out_.close();
}

}  // namespace tagcos
