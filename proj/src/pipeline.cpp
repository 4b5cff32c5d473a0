#include "tagcos/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "tagcos/clustering.hpp"
#include "tagcos/diagnostics.hpp"
#include "tagcos/error.hpp"
#include "tagcos/records.hpp"

namespace tagcos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSelectionFormat = "tagcos.selection.v1";
constexpr const char* kReportFormat = "tagcos.report.v1";

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

FeatureFile load_features(const RunConfig& config) {
    require(!config.feature_paths.empty(), ErrorKind::usage, "no feature files given");
    return concat_feature_files(config.feature_paths);
}

json selection_document(std::string_view method, const RunConfig& config, const FeatureFile& ff,
                        std::size_t budget, const SelectionResult& result) {
    json doc;
    doc["format"] = kSelectionFormat;
    doc["method"] = std::string(method);
    doc["config"] = config_echo(config);
    doc["n_samples"] = ff.matrix.n_samples();
    doc["budget"] = budget;
    std::vector<std::int64_t> ids;
    std::map<std::string, std::size_t> counts;
    for (const auto& rec : ff.manifest.records) counts.emplace(rec.source_dataset, 0);
    for (auto i : result.indices) {
        ids.push_back(ff.manifest.records[i].sample_id);
        ++counts[ff.manifest.records[i].source_dataset];
    }
    doc["sample_ids"] = ids;
    doc["source_counts"] = counts;
    doc["result"] = to_json(result);
    return doc;
}

void prepare_output_dir(const RunConfig& config) {
    require(!config.output_dir.empty(), ErrorKind::usage, "output directory required");
    fs::create_directories(config.output_dir);
}

}  // namespace

void RunConfig::validate() const {
    require(!feature_paths.empty(), ErrorKind::usage, "at least one feature file is required");
    require(budget_fraction.has_value() != budget.has_value(), ErrorKind::usage,
            "set exactly one of budget fraction or absolute budget");
    if (budget_fraction)
        require(*budget_fraction > 0.0 && *budget_fraction <= 1.0, ErrorKind::usage, "budget fraction must lie in (0, 1]");
    require(k >= 1, ErrorKind::usage, "k must be >= 1");
    require(lambda >= 0.0, ErrorKind::usage, "lambda must be >= 0");
    require(tol >= 0.0, ErrorKind::usage, "tol must be >= 0");
    require(kmeans_restarts >= 1, ErrorKind::usage, "kmeans_restarts must be >= 1");
}

std::size_t RunConfig::resolve_budget(std::size_t n) const {
    if (budget) {
        require(*budget <= n, ErrorKind::invalid_argument,
                "budget " + std::to_string(*budget) + " exceeds " + std::to_string(n) + " samples");
        return *budget;
    }
    const double raw = *budget_fraction * static_cast<double>(n);
    return std::min(n, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

json config_echo(const RunConfig& c) {
    std::vector<std::string> paths;
    for (const auto& p : c.feature_paths) paths.push_back(p.string());
    json j;
    j["feature_paths"] = paths;
    j["k"] = c.k;
    j["budget_fraction"] = c.budget_fraction ? json(*c.budget_fraction) : json(nullptr);
    j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
    j["lambda"] = c.lambda;
    j["tol"] = c.tol;
    j["seed"] = c.seed;
    j["normalize"] = c.normalize;
    j["nonnegative"] = c.nonnegative;
    j["kmeans_max_iters"] = c.kmeans_max_iters;
    j["kmeans_tol"] = c.kmeans_tol;
    j["kmeans_restarts"] = c.kmeans_restarts;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    try {
        const json& src = j.contains("config") && j.at("config").is_object() ? j.at("config") : j;
        if (src.contains("feature_paths"))
            for (const auto& p : src.at("feature_paths")) c.feature_paths.emplace_back(p.get<std::string>());
        if (src.contains("k")) c.k = src.at("k").get<std::size_t>();
        if (src.contains("budget_fraction") && !src.at("budget_fraction").is_null())
            c.budget_fraction = src.at("budget_fraction").get<double>();
        if (src.contains("budget") && !src.at("budget").is_null()) c.budget = src.at("budget").get<std::size_t>();
        if (src.contains("lambda")) c.lambda = src.at("lambda").get<double>();
        if (src.contains("tol")) c.tol = src.at("tol").get<double>();
        if (src.contains("seed")) c.seed = src.at("seed").get<std::uint64_t>();
        if (src.contains("normalize")) c.normalize = src.at("normalize").get<bool>();
        if (src.contains("nonnegative")) c.nonnegative = src.at("nonnegative").get<bool>();
        if (src.contains("kmeans_max_iters")) c.kmeans_max_iters = src.at("kmeans_max_iters").get<std::size_t>();
        if (src.contains("kmeans_tol")) c.kmeans_tol = src.at("kmeans_tol").get<double>();
        if (src.contains("kmeans_restarts")) c.kmeans_restarts = src.at("kmeans_restarts").get<std::size_t>();
        if (src.contains("output_dir")) c.output_dir = src.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema_mismatch, std::string("run config: ") + e.what());
    }
    if (!c.budget_fraction && !c.budget) c.budget_fraction = kDefaultBudgetFraction;
    return c;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".tagcos.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw Error(ErrorKind::locked, path_.string() + " exists; another run is using this directory");
    std::fclose(f);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

fs::path run_cluster(const RunConfig& config) {
    require(!config.feature_paths.empty(), ErrorKind::usage, "no feature files given");
    prepare_output_dir(config);
    OutputLock lock(config.output_dir);
    const FeatureFile ff = load_features(config);
    KMeansOptions opt{config.k, config.seed, config.kmeans_max_iters, config.kmeans_tol, config.normalize,
                       config.kmeans_restarts};
    const ClusterAssignment a = kmeans(ff.matrix.view(), opt);
    const fs::path out = config.output_dir / "assignment.json";
    write_assignment(a, out, json{{"config", config_echo(config)}});
    return out;
}

PipelineOutputs run_select(const RunConfig& config) {
    config.validate();
    prepare_output_dir(config);
    OutputLock lock(config.output_dir);

    const FeatureFile ff = load_features(config);
    const FeatureView view = ff.matrix.view();
    const std::size_t budget = config.resolve_budget(view.rows);
    const json echo = config_echo(config);

    const auto t_cluster = clock_type::now();
    ClusterAssignment assignment;
    if (config.assignment_path) {
        assignment = read_assignment(*config.assignment_path);
        assignment.validate(view.rows);
        require(assignment.dim == view.dim, ErrorKind::dim_mismatch, "stored assignment dim differs from features");
    } else {
        KMeansOptions opt{config.k, config.seed, config.kmeans_max_iters, config.kmeans_tol, config.normalize,
                       config.kmeans_restarts};
        assignment = kmeans(view, opt);
    }
    const double cluster_seconds = seconds_since(t_cluster);

    const auto t_select = clock_type::now();
    SelectionResult result = tagcos_select(view, assignment, budget, config.lambda, config.tol, config.nonnegative);
    const double select_seconds = seconds_since(t_select);

    PipelineOutputs out;
    out.assignment_path = config.output_dir / "assignment.json";
    out.selection_path = config.output_dir / "selection.json";
    out.submodularity_path = config.output_dir / "submodularity.json";
    out.run_path = config.output_dir / "run.json";

    write_assignment(assignment, out.assignment_path, json{{"config", echo}});

    json doc = selection_document("tagcos", config, ff, budget, result);
    doc["k"] = assignment.k;
    if (config.record_timing) doc["wall_seconds"] = json{{"cluster", cluster_seconds}, {"select", select_seconds}};
    write_json_file(doc, out.selection_path);

    const auto global_target = column_mean(view);
    json sub;
    sub["config"] = echo;
    sub["global"] = to_json(submodularity_report(view, global_target, budget, config.lambda, config.tol));
    json clusters = json::array();
    const auto budgets = allocate_budget(assignment.sizes, budget);
    std::vector<std::vector<std::size_t>> members(assignment.k);
    for (std::size_t i = 0; i < view.rows; ++i) members[assignment.labels[i]].push_back(i);
    for (std::size_t c = 0; c < assignment.k; ++c) {
        const auto rows = gather_rows(view, members[c]);
        json entry = to_json(submodularity_report(FeatureView(rows, members[c].size(), view.dim),
                                                  assignment.centroid(c), std::max<std::size_t>(budgets[c], 1),
                                                  config.lambda, config.tol));
        entry["cluster"] = c;
        entry["size"] = assignment.sizes[c];
        entry["allocated"] = budgets[c];
        clusters.push_back(std::move(entry));
    }
    sub["clusters"] = clusters;
    write_json_file(sub, out.submodularity_path);

    json run;
    run["config"] = echo;
    run["n_samples"] = view.rows;
    run["budget"] = budget;
    run["selected"] = result.indices.size();
    run["outputs"] = {"assignment.json", "selection.json", "submodularity.json"};
    write_json_file(run, out.run_path);

    out.selection = std::move(result);
    return out;
}

PipelineOutputs run_baseline(BaselineMethod method, const RunConfig& config) {
    config.validate();
    prepare_output_dir(config);
    OutputLock lock(config.output_dir);

    const FeatureFile ff = load_features(config);
    const FeatureView view = ff.matrix.view();
    const std::size_t budget = config.resolve_budget(view.rows);
    const auto t0 = clock_type::now();

    SelectionResult result;
    json extra = json::object();
    switch (method) {
        case BaselineMethod::uniform:
            result = unweighted_result(view, uniform_select(view.rows, budget, config.seed));
            break;
        case BaselineMethod::hardest:
            result = unweighted_result(view, score_rank_select(ff.manifest, budget, ScoreDirection::highest));
            break;
        case BaselineMethod::lowest_score:
            result = unweighted_result(view, score_rank_select(ff.manifest, budget, ScoreDirection::lowest));
            break;
        case BaselineMethod::kcenter_greedy: {
            KCenterResult kc = kcenter_greedy(view, budget, config.seed);
            extra["covering_radius"] = kc.covering_radius;
            result = unweighted_result(view, std::move(kc.indices));
            break;
        }
        case BaselineMethod::global_omp:
            result = global_omp_select(view, budget, config.lambda, config.tol, config.nonnegative);
            break;
    }
    const double seconds = seconds_since(t0);

    PipelineOutputs out;
    out.selection_path = config.output_dir / "selection.json";
    out.run_path = config.output_dir / "run.json";

    json doc = selection_document(to_string(method), config, ff, budget, result);
    for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
    if (config.record_timing) doc["wall_seconds"] = json{{"select", seconds}};
    write_json_file(doc, out.selection_path);

    json run;
    run["config"] = config_echo(config);
    run["method"] = std::string(to_string(method));
    run["n_samples"] = view.rows;
    run["budget"] = budget;
    run["selected"] = result.indices.size();
    run["outputs"] = {"selection.json"};
    write_json_file(run, out.run_path);

    out.selection = std::move(result);
    return out;
}

void run_project(const std::vector<fs::path>& raw_paths, std::uint64_t target_dim, std::uint64_t seed,
                 const fs::path& out, bool identity_signs) {
    require(!raw_paths.empty(), ErrorKind::usage, "no raw gradient files given");
    require(raw_paths.size() <= UINT8_MAX, ErrorKind::usage, "too many checkpoints");
    std::vector<FeatureReader> readers;
    readers.reserve(raw_paths.size());
    for (const auto& p : raw_paths) readers.emplace_back(p);

    const auto& h0 = readers.front().header();
    for (std::size_t i = 1; i < readers.size(); ++i) {
        const auto& h = readers[i].header();
        require(h.n_samples == h0.n_samples && h.dim == h0.dim, ErrorKind::dim_mismatch,
                raw_paths[i].string() + ": shape differs from " + raw_paths[0].string());
    }
    const SampleManifest manifest = read_manifest(manifest_path_for(raw_paths.front()));
    require(manifest.size() == h0.n_samples, ErrorKind::length_mismatch, "manifest/raw row count differ");
    for (std::size_t i = 1; i < raw_paths.size(); ++i) {
        const SampleManifest other = read_manifest(manifest_path_for(raw_paths[i]));
        require(other.size() == manifest.size(), ErrorKind::length_mismatch, "checkpoint manifests differ");
        for (std::size_t r = 0; r < manifest.size(); ++r)
            require(other.records[r].sample_id == manifest.records[r].sample_id, ErrorKind::invalid_argument,
                    "checkpoint manifests list different samples");
    }

    ProjectionSpec spec{h0.dim, target_dim, seed, identity_signs};
    spec.validate();
    FeatureWriter writer(out, h0.n_samples, static_cast<std::uint32_t>(target_dim),
                         static_cast<std::uint8_t>(raw_paths.size()));
    std::vector<float> raw(h0.dim);
    std::vector<double> sum(target_dim);
    std::vector<float> row(target_dim);
    const double count = static_cast<double>(readers.size());
    for (std::uint64_t i = 0; i < h0.n_samples; ++i) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (auto& reader : readers) {
            require(reader.read_row(raw), ErrorKind::truncated, "raw gradient file ended early");
            const auto projected = rademacher_project(std::span<const float>(raw), spec);
            for (std::size_t j = 0; j < target_dim; ++j) sum[j] += projected[j];
        }
        for (std::size_t j = 0; j < target_dim; ++j) row[j] = static_cast<float>(sum[j] / count);
        writer.write_row(row);
    }
    writer.finish();
    write_manifest(manifest, manifest_path_for(out));
}

json run_oracle(const fs::path& features, std::size_t budget, double lambda, bool nonnegative) {
    const FeatureFile ff = read_features(features);
    const FeatureView view = ff.matrix.view();
    require(budget >= 1 && budget <= view.rows, ErrorKind::usage, "budget must lie in [1, n]");
    const auto target = column_mean(view);
    const BruteForceResult best = brute_force_optimal(view, target, budget, lambda, nonnegative);
    const OmpResult greedy = omp_select(view, target, OmpConfig{lambda, 0.0, budget, nonnegative});
    json j;
    j["features"] = features.string();
    j["budget"] = budget;
    j["lambda"] = lambda;
    j["nonnegative"] = nonnegative;
    j["subsets_evaluated"] = best.subsets_evaluated;
    j["optimal"] = json{{"indices", best.indices}, {"weights", best.weights}, {"error", best.error}};
    j["omp"] = json{{"indices", greedy.indices}, {"weights", greedy.weights}, {"error", greedy.final_error},
                    {"error_trace", greedy.error_trace}};
    j["ratio"] = best.error > 0.0 ? json(greedy.final_error / best.error) : json(nullptr);
    return j;
}

std::string run_report(const std::vector<fs::path>& selection_files, const std::optional<fs::path>& json_out) {
    require(!selection_files.empty(), ErrorKind::usage, "no selection files given");
    json rows = json::array();
    std::set<std::string> sources;
    for (const auto& path : selection_files) {
        const json doc = read_json_file(path);
        if (!doc.is_object() || !doc.contains("format") || doc.at("format") != kSelectionFormat)
            throw Error(ErrorKind::schema_mismatch, path.string() + " is not a selection file");
        try {
            json row;
            row["file"] = path.string();
            row["method"] = doc.at("method");
            row["size"] = doc.at("result").at("indices").size();
            row["budget"] = doc.at("budget");
            row["global_error"] = doc.at("result").at("global_error");
            row["wall_seconds"] = doc.contains("wall_seconds") ? doc.at("wall_seconds") : json(nullptr);
            row["source_counts"] = doc.at("source_counts");
            for (auto it = row["source_counts"].begin(); it != row["source_counts"].end(); ++it)
                sources.insert(it.key());
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::schema_mismatch, path.string() + ": " + e.what());
        }
    }

    std::vector<std::string> header{"method", "size", "budget", "global_error", "wall_s"};
    for (const auto& s : sources) header.push_back(s);
    std::vector<std::vector<std::string>> cells;
    for (const auto& row : rows) {
        std::vector<std::string> line;
        line.push_back(row.at("method").get<std::string>());
        line.push_back(std::to_string(row.at("size").get<std::size_t>()));
        line.push_back(std::to_string(row.at("budget").get<std::size_t>()));
        std::ostringstream err;
        err << std::setprecision(6) << row.at("global_error").get<double>();
        line.push_back(err.str());
        const auto& ws = row.at("wall_seconds");
        if (ws.is_null()) {
            line.push_back("-");
        } else {
            double total = 0.0;
            for (const auto& [_, v] : ws.items()) total += v.get<double>();
            std::ostringstream t;
            t << std::fixed << std::setprecision(3) << total;
            line.push_back(t.str());
        }
        for (const auto& s : sources) {
            const auto& sc = row.at("source_counts");
            line.push_back(sc.contains(s) ? std::to_string(sc.at(s).get<std::size_t>()) : "0");
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& line : cells) width[c] = std::max(width[c], line[c].size());
    }
    std::ostringstream table;
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) table << "  ";
            table << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << line[c];
        }
        table << '\n';
    };
    emit(header);
    for (const auto& line : cells) emit(line);

    if (json_out) write_json_file(json{{"format", kReportFormat}, {"rows", rows}}, *json_out);
    return table.str();
}

}  // namespace tagcos
