#include "tagcos/records.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tagcos/error.hpp"

namespace tagcos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAssignmentFormat = "tagcos.cluster_assignment.v1";

fs::path centroid_sidecar(const fs::path& json_path) {
    return json_path.parent_path() / (json_path.stem().string() + ".centroids.f64");
}

}  // namespace

json to_json(const ClusterSelection& cs) {
    return json{{"cluster", cs.cluster},         {"budget", cs.budget},
                {"indices", cs.indices},         {"weights", cs.weights},
                {"final_error", cs.final_error}, {"residual_norm", cs.residual_norm},
                {"iterations", cs.iterations},   {"error_trace", cs.error_trace}};
}

json to_json(const SelectionResult& result) {
    json per = json::array();
    for (const auto& cs : result.per_cluster) per.push_back(to_json(cs));
    return json{{"indices", result.indices},
                {"weights", result.weights},
                {"per_cluster", per},
                {"global_error", result.global_error}};
}

SelectionResult selection_from_json(const json& j) {
    try {
        SelectionResult r;
        r.indices = j.at("indices").get<std::vector<std::size_t>>();
        r.weights = j.at("weights").get<std::vector<double>>();
        r.global_error = j.at("global_error").get<double>();
        for (const auto& c : j.at("per_cluster")) {
            ClusterSelection cs;
            cs.cluster = c.at("cluster").get<std::size_t>();
            cs.budget = c.at("budget").get<std::size_t>();
            cs.indices = c.at("indices").get<std::vector<std::size_t>>();
            cs.weights = c.at("weights").get<std::vector<double>>();
            cs.final_error = c.at("final_error").get<double>();
            cs.residual_norm = c.at("residual_norm").get<double>();
            cs.iterations = c.at("iterations").get<std::size_t>();
            cs.error_trace = c.at("error_trace").get<std::vector<double>>();
            r.per_cluster.push_back(std::move(cs));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema_mismatch, std::string("selection record: ") + e.what());
    }
}

json to_json(const SubmodularityReport& r) {
    json j{{"gradient_bound", r.gradient_bound},
           {"budget", r.budget},
           {"lambda", r.lambda},
           {"gamma", r.lambda > 0.0 ? json(r.gamma) : json(nullptr)},
           {"l_max", r.l_max},
           {"tol", r.tol},
           {"optimal_size", r.optimal_size},
           {"size_bound", r.size_bound ? json(*r.size_bound) : json(nullptr)}};
    return j;
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    require(out.good(), ErrorKind::io, "write failed " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema_mismatch, path.string() + ": " + e.what());
    }
}

void write_assignment(const ClusterAssignment& a, const fs::path& path, const json& extra) {
    const fs::path sidecar = centroid_sidecar(path);
    {
        std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::io, "cannot write " + sidecar.string());
        std::string buf;
        buf.reserve(a.centroids.size() * 8);
        for (double v : a.centroids) {
            const auto u = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        require(out.good(), ErrorKind::io, "write failed " + sidecar.string());
    }
    json j = extra;
    j["format"] = kAssignmentFormat;
    j["k"] = a.k;
    j["dim"] = a.dim;
    j["labels"] = a.labels;
    j["sizes"] = a.sizes;
    j["inertia"] = a.inertia;
    j["inertia_trace"] = a.inertia_trace;
    j["iterations"] = a.iterations;
    j["converged"] = a.converged;
    j["centroids_path"] = sidecar.filename().string();
    write_json_file(j, path);
}

ClusterAssignment read_assignment(const fs::path& path) {
    const json j = read_json_file(path);
    ClusterAssignment a;
    std::string centroid_file;
    try {
        if (j.at("format").get<std::string>() != kAssignmentFormat)
            throw Error(ErrorKind::schema_mismatch, path.string() + ": unexpected format tag");
        a.k = j.at("k").get<std::size_t>();
        a.dim = j.at("dim").get<std::size_t>();
        a.labels = j.at("labels").get<std::vector<std::uint32_t>>();
        a.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        a.inertia = j.at("inertia").get<double>();
        a.inertia_trace = j.at("inertia_trace").get<std::vector<double>>();
        a.iterations = j.at("iterations").get<std::size_t>();
        a.converged = j.at("converged").get<bool>();
        centroid_file = j.at("centroids_path").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema_mismatch, path.string() + ": " + e.what());
    }
    const fs::path sidecar = path.parent_path() / centroid_file;
    std::ifstream in(sidecar, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + sidecar.string());
    std::vector<unsigned char> raw(a.k * a.dim * 8);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorKind::truncated, sidecar.string());
    a.centroids.resize(a.k * a.dim);
    for (std::size_t i = 0; i < a.centroids.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
        a.centroids[i] = std::bit_cast<double>(u);
    }
    a.validate(a.labels.size());
    return a;
}

}  // namespace tagcos
