#pragma once

#include <filesystem>

#include "json.hpp"
#include "tagcos/clustering.hpp"
#include "tagcos/diagnostics.hpp"
#include "tagcos/selection.hpp"

namespace tagcos {

// JSON forms of the result records. Doubles are emitted with round-trip
// precision, so equal values always serialise to identical bytes.

nlohmann::json to_json(const ClusterSelection& cs);
nlohmann::json to_json(const SelectionResult& result);
SelectionResult selection_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SubmodularityReport& report);

/// Writes <path> (JSON) and <path stem>.centroids.f64 (little-endian float64,
/// k x dim, row-major) next to it. extra is merged into the JSON object.
void write_assignment(const ClusterAssignment& assignment, const std::filesystem::path& path,
                      const nlohmann::json& extra = nlohmann::json::object());
ClusterAssignment read_assignment(const std::filesystem::path& path);

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace tagcos
