#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tagcos/baselines.hpp"
#include "tagcos/gradient_geometry.hpp"
#include "tagcos/selection.hpp"
#include "tagcos/synthetic.hpp"

namespace tagcos {

inline constexpr double kDefaultBudgetFraction = 0.05;
inline constexpr std::size_t kDefaultClusters = 100;
inline constexpr std::uint64_t kDefaultProjectionDim = 8192;

struct RunConfig {
    std::vector<std::filesystem::path> feature_paths;
    std::size_t k = kDefaultClusters;
    std::optional<double> budget_fraction;
    std::optional<std::size_t> budget;
    double lambda = kDefaultLambda;
    double tol = kDefaultTol;
    std::uint64_t seed = 0;
    bool normalize = false;
    bool nonnegative = true;
    std::size_t kmeans_max_iters = 300;
    double kmeans_tol = 1e-6;
    std::size_t kmeans_restarts = 10;
    std::filesystem::path output_dir;
    // Resume from a stored assignment instead of clustering.
    std::optional<std::filesystem::path> assignment_path;
    // Adds wall-clock timings to outputs (which then differ between runs).
    bool record_timing = false;

    void validate() const;
    // Absolute budget for n samples; a fraction is floored.
    std::size_t resolve_budget(std::size_t n) const;
};

/// Every parameter that influences results. Output locations, resume paths
/// and timing switches are left out so reruns produce identical bytes.
nlohmann::json config_echo(const RunConfig& config);

/// Inverse of config_echo (output_dir etc. left at defaults). Missing keys
/// keep defaults; when neither budget key is present the fraction defaults
/// to 0.05.
RunConfig config_from_json(const nlohmann::json& j);

/// Holds <dir>/.tagcos.lock for its lifetime; a second holder fails with
/// ErrorKind::locked.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

struct PipelineOutputs {
    SelectionResult selection;
    std::filesystem::path selection_path;
    std::filesystem::path assignment_path;
    std::filesystem::path submodularity_path;
    std::filesystem::path run_path;
};

// Files written by run_select: selection.json, assignment.json (+ centroid
// sidecar), submodularity.json, run.json.
PipelineOutputs run_select(const RunConfig& config);

// Writes selection.json and run.json with method-specific extras.
PipelineOutputs run_baseline(BaselineMethod method, const RunConfig& config);

std::filesystem::path run_cluster(const RunConfig& config);

/// Projects each raw-gradient file (one per checkpoint, same samples) row by
/// row and averages the projections across checkpoints.
void run_project(const std::vector<std::filesystem::path>& raw_paths, std::uint64_t target_dim,
                 std::uint64_t seed, const std::filesystem::path& out, bool identity_signs = false);

/// Brute-force optimum vs omp_select for one small feature file against its
/// mean gradient.
nlohmann::json run_oracle(const std::filesystem::path& features, std::size_t budget, double lambda,
                          bool nonnegative);

/// Aligned comparison table; the machine-readable rows are written to
/// json_out when given.
std::string run_report(const std::vector<std::filesystem::path>& selection_files,
                       const std::optional<std::filesystem::path>& json_out);

}  // namespace tagcos
