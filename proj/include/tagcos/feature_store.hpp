#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tagcos {

/// Non-owning row-major view of n rows by dim columns of float32 features.
struct FeatureView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t dim = 0;

    FeatureView() = default;
    FeatureView(std::span<const float> values, std::size_t n_rows, std::size_t n_cols);

    std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

/// N x d matrix of projected per-sample gradient features. The shape is
/// checked on construction; validate() additionally rejects non-finite
/// entries and is called by every reader and writer.
class GradientFeatureMatrix {
public:
    GradientFeatureMatrix() = default;
    GradientFeatureMatrix(std::size_t n_samples, std::size_t dim, std::vector<float> data,
                          std::uint32_t checkpoint_count = 1);

    std::size_t n_samples() const noexcept { return n_samples_; }
    std::size_t dim() const noexcept { return dim_; }
    std::uint32_t checkpoint_count() const noexcept { return checkpoint_count_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const { return view().row(i); }
    FeatureView view() const { return {data_, n_samples_, dim_}; }

    void validate() const;

    friend bool operator==(const GradientFeatureMatrix&, const GradientFeatureMatrix&) = default;

private:
    std::size_t n_samples_ = 0;
    std::size_t dim_ = 0;
    std::uint32_t checkpoint_count_ = 1;
    std::vector<float> data_;
};

struct ManifestRecord {
    std::int64_t sample_id = 0;
    std::string source_dataset;
    std::optional<double> score;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct SampleManifest {
    std::vector<ManifestRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    void validate() const;  // unique sample ids

    friend bool operator==(const SampleManifest&, const SampleManifest&) = default;
};

// On-disk container: 22-byte little-endian header followed by the float32
// payload. The manifest lives in a JSON-lines sidecar next to it.
inline constexpr char kFeatureMagic[4] = {'T', 'G', 'C', 'S'};
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 22;

struct FeatureFileHeader {
    std::uint32_t format_version = kFeatureFormatVersion;
    std::uint64_t n_samples = 0;
    std::uint32_t dim = 0;
    std::uint8_t dtype_code = kDtypeFloat32;
    std::uint8_t checkpoint_count = 1;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& feature_path);

void write_features(const GradientFeatureMatrix& matrix, const SampleManifest& manifest,
                    const std::filesystem::path& path);

struct FeatureFile {
    GradientFeatureMatrix matrix;
    SampleManifest manifest;
};

FeatureFile read_features(const std::filesystem::path& path);

/// Rows concatenated in argument order; sample ids must stay unique.
FeatureFile concat_feature_files(std::span<const std::filesystem::path> paths);

SampleManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SampleManifest& manifest, const std::filesystem::path& path);

/// Row-at-a-time reader so raw P-dimensional gradients never need to be
/// resident all at once.
class FeatureReader {
public:
    explicit FeatureReader(const std::filesystem::path& path);

    const FeatureFileHeader& header() const noexcept { return header_; }
    std::size_t rows_read() const noexcept { return next_row_; }

    // Reads the next row into out (size must equal dim). Returns false at end.
    bool read_row(std::span<float> out);

private:
    std::filesystem::path path_;
    std::ifstream in_;
    FeatureFileHeader header_;
    std::size_t next_row_ = 0;
};

/// Streaming counterpart of write_features: header first, rows appended.
class FeatureWriter {
public:
    FeatureWriter(const std::filesystem::path& path, std::uint64_t n_samples, std::uint32_t dim,
                  std::uint8_t checkpoint_count);

    void write_row(std::span<const float> row);
    void finish();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t n_samples_;
    std::uint32_t dim_;
    std::uint64_t rows_written_ = 0;
};

}  // namespace tagcos
