#include "tagcos/synthetic.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "tagcos/error.hpp"
#include "tagcos/random.hpp"

namespace tagcos {

void BlobSpec::validate() const {
    require(n_clusters >= 1, ErrorKind::invalid_argument, "need at least one cluster");
    require(samples_per_cluster.size() == n_clusters, ErrorKind::length_mismatch,
            "samples_per_cluster must have n_clusters entries");
    for (auto c : samples_per_cluster) require(c >= 1, ErrorKind::invalid_argument, "cluster counts must be >= 1");
    require(dim >= 1, ErrorKind::invalid_argument, "dim must be >= 1");
    require(noise_sigma >= 0.0, ErrorKind::invalid_argument, "noise_sigma must be >= 0");
    require(center_scale >= 0.0, ErrorKind::invalid_argument, "center_scale must be >= 0");
}

BlobData generate_blobs(const BlobSpec& spec) {
    spec.validate();
    CounterRng center_rng(spec.seed, 1);
    BlobData out;
    out.centers.resize(spec.n_clusters * spec.dim);
    for (auto& c : out.centers) c = center_rng.uniform(-0.5 * spec.center_scale, 0.5 * spec.center_scale);

    std::size_t n = 0;
    for (auto c : spec.samples_per_cluster) n += c;
    std::vector<float> data;
    data.reserve(n * spec.dim);
    out.true_labels.reserve(n);
    out.manifest.records.reserve(n);

    CounterRng noise_rng(spec.seed, 2);
    std::vector<float> row(spec.dim);
    for (std::size_t k = 0; k < spec.n_clusters; ++k) {
        const std::string source = "blob_" + std::to_string(k);
        for (std::size_t s = 0; s < spec.samples_per_cluster[k]; ++s) {
            double dist2 = 0.0;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                const double center = out.centers[k * spec.dim + j];
                row[j] = static_cast<float>(center + spec.noise_sigma * noise_rng.normal());
                const double diff = static_cast<double>(row[j]) - center;
                dist2 += diff * diff;
            }
            data.insert(data.end(), row.begin(), row.end());
            out.true_labels.push_back(static_cast<std::uint32_t>(k));
            out.manifest.records.push_back(
                {static_cast<std::int64_t>(out.manifest.records.size()), source, std::sqrt(dist2)});
        }
    }
    out.features = GradientFeatureMatrix(n, spec.dim, std::move(data));
    out.features.validate();
    return out;
}

void write_blobs(const BlobData& data, const std::filesystem::path& path) {
    write_features(data.features, data.manifest, path);
    nlohmann::json j;
    j["true_labels"] = data.true_labels;
    std::ofstream out(path.string() + ".labels.json", std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot write labels sidecar");
    out << j.dump() << '\n';
}

std::vector<std::uint32_t> read_true_labels(const std::filesystem::path& feature_path) {
    std::ifstream in(feature_path.string() + ".labels.json", std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open labels sidecar for " + feature_path.string());
    try {
        return nlohmann::json::parse(in).at("true_labels").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::schema_mismatch, e.what());
    }
}

}  // namespace tagcos
