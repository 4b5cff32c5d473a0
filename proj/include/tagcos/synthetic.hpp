#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tagcos/feature_store.hpp"

namespace tagcos {

struct BlobSpec {
    std::size_t n_clusters = 10;
    // One count per cluster; may be imbalanced.
    std::vector<std::size_t> samples_per_cluster;
    std::size_t dim = 64;
    double center_scale = 10.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BlobData {
    GradientFeatureMatrix features;
    SampleManifest manifest;
    std::vector<std::uint32_t> true_labels;
    std::vector<double> centers;  // n_clusters x dim
};

/// Gaussian blobs around centers drawn uniformly from a cube of side
/// center_scale centred on the origin. Rows are grouped by blob; the
/// manifest tags each sample "blob_<k>" and scores it with its distance to
/// the blob center.
BlobData generate_blobs(const BlobSpec& spec);

/// Writes features, manifest and a JSON true-labels sidecar
/// (<path>.labels.json).
void write_blobs(const BlobData& data, const std::filesystem::path& path);
std::vector<std::uint32_t> read_true_labels(const std::filesystem::path& feature_path);

}  // namespace tagcos
