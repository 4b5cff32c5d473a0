#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"
#include "tagcos/pipeline.hpp"
#include "tagcos/records.hpp"
#include "tagcos/synthetic.hpp"

namespace {

using tagcos::RunConfig;

// Flags shared by cluster/select/baseline. Values only override the config
// file when the flag was actually given.
struct RunFlags {
    std::string config_file;
    std::vector<std::string> features;
    std::size_t k = tagcos::kDefaultClusters;
    double fraction = tagcos::kDefaultBudgetFraction;
    std::size_t budget = 0;
    double lambda = tagcos::kDefaultLambda;
    double tol = tagcos::kDefaultTol;
    std::uint64_t seed = 0;
    bool normalize = false;
    bool signed_weights = false;
    std::size_t max_iters = 300;
    double kmeans_tol = 1e-6;
    std::size_t restarts = 10;
    std::string out_dir;
    std::string assignment;
    bool timing = false;

    CLI::Option* o_features = nullptr;
    CLI::Option* o_k = nullptr;
    CLI::Option* o_fraction = nullptr;
    CLI::Option* o_budget = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_tol = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_normalize = nullptr;
    CLI::Option* o_signed = nullptr;
    CLI::Option* o_iters = nullptr;
    CLI::Option* o_ktol = nullptr;
    CLI::Option* o_restarts = nullptr;

    void attach(CLI::App* app, bool with_selection) {
        app->add_option("--config", config_file, "JSON run config; flags override its values");
        o_features = app->add_option("-f,--features", features, "feature files (concatenated in order)");
        o_k = app->add_option("-k,--clusters", k, "number of clusters");
        o_seed = app->add_option("--seed", seed, "random seed");
        o_normalize = app->add_flag("--normalize", normalize, "cluster unit-normalised rows");
        o_iters = app->add_option("--max-iters", max_iters, "k-means iteration cap");
        o_ktol = app->add_option("--kmeans-tol", kmeans_tol, "k-means centroid shift tolerance");
        o_restarts = app->add_option("--restarts", restarts, "k-means seedings; lowest inertia wins");
        app->add_option("-o,--out-dir", out_dir, "output directory")->required();
        if (!with_selection) return;
        o_fraction = app->add_option("--fraction", fraction, "budget as a fraction of N");
        o_budget = app->add_option("--budget", budget, "absolute budget");
        o_fraction->excludes(o_budget);
        o_lambda = app->add_option("--lambda", lambda, "ridge penalty");
        o_tol = app->add_option("--tol", tol, "early-stop error tolerance");
        o_signed = app->add_flag("--signed", signed_weights, "allow negative weights");
        app->add_flag("--timing", timing, "record wall-clock timings in the outputs");
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config_file.empty()) c = tagcos::config_from_json(tagcos::read_json_file(config_file));
        if (o_features->count()) {
            c.feature_paths.clear();
            for (const auto& f : features) c.feature_paths.emplace_back(f);
        }
        if (o_k->count()) c.k = k;
        if (o_seed->count()) c.seed = seed;
        if (o_normalize->count()) c.normalize = normalize;
        if (o_iters->count()) c.kmeans_max_iters = max_iters;
        if (o_ktol->count()) c.kmeans_tol = kmeans_tol;
        if (o_restarts->count()) c.kmeans_restarts = restarts;
        if (o_fraction && o_fraction->count()) {
            c.budget_fraction = fraction;
            c.budget.reset();
        }
        if (o_budget && o_budget->count()) {
            c.budget = budget;
            c.budget_fraction.reset();
        }
        if (!c.budget && !c.budget_fraction) c.budget_fraction = tagcos::kDefaultBudgetFraction;
        if (o_lambda && o_lambda->count()) c.lambda = lambda;
        if (o_tol && o_tol->count()) c.tol = tol;
        if (o_signed && o_signed->count()) c.nonnegative = !signed_weights;
        c.output_dir = out_dir;
        if (!assignment.empty()) c.assignment_path = assignment;
        c.record_timing = timing;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tagcos: clustered gradient-matching coreset selection"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker threads (default: TAGCOS_THREADS or hardware)");

    // gen
    auto* gen = app.add_subcommand("gen", "write a synthetic Gaussian-blob feature file");
    std::string gen_out;
    tagcos::BlobSpec blob;
    std::vector<std::size_t> per_cluster{200};
    gen->add_option("-o,--out", gen_out, "output feature file")->required();
    gen->add_option("--clusters", blob.n_clusters, "number of blobs");
    gen->add_option("--per-cluster", per_cluster, "samples per blob (one value, or one per blob)");
    gen->add_option("--dim", blob.dim, "feature dimension");
    gen->add_option("--scale", blob.center_scale, "side of the cube holding the centers");
    gen->add_option("--sigma", blob.noise_sigma, "per-coordinate noise");
    gen->add_option("--seed", blob.seed, "random seed");

    // project
    auto* project = app.add_subcommand("project", "random-project raw gradients, averaging checkpoints");
    std::vector<std::string> raw_files;
    std::uint64_t target_dim = tagcos::kDefaultProjectionDim;
    std::uint64_t project_seed = 0;
    std::string project_out;
    bool identity = false;
    project->add_option("raw", raw_files, "raw gradient files, one per checkpoint");
    project->add_option("-d,--dim", target_dim, "projection dimension");
    project->add_option("--seed", project_seed, "projection seed");
    project->add_option("-o,--out", project_out, "output feature file")->required();
    project->add_flag("--identity", identity, "identity signs (requires dim equal to the raw dim)");

    auto* cluster = app.add_subcommand("cluster", "k-means cluster assignment");
    RunFlags cluster_flags;
    cluster_flags.attach(cluster, false);

    auto* select = app.add_subcommand("select", "clustered OMP selection");
    RunFlags select_flags;
    select_flags.attach(select, true);
    select->add_option("--assignment", select_flags.assignment, "reuse a stored assignment.json");

    auto* baseline = app.add_subcommand("baseline", "baseline selection");
    RunFlags baseline_flags;
    std::string method;
    baseline_flags.attach(baseline, true);
    baseline->add_option("-m,--method", method, "uniform | hardest | lowest_score | kcenter_greedy | global_omp")
        ->required();

    auto* oracle = app.add_subcommand("oracle", "brute-force optimum vs greedy on a small feature file");
    std::string oracle_features;
    std::size_t oracle_budget = 1;
    double oracle_lambda = tagcos::kDefaultLambda;
    bool oracle_signed = false;
    std::string oracle_out;
    oracle->add_option("-f,--features", oracle_features, "feature file")->required();
    oracle->add_option("--budget", oracle_budget, "subset size limit")->required();
    oracle->add_option("--lambda", oracle_lambda, "ridge penalty");
    oracle->add_flag("--signed", oracle_signed, "allow negative weights");
    oracle->add_option("-o,--out", oracle_out, "write the JSON result here as well");

    auto* report = app.add_subcommand("report", "compare selection files");
    std::vector<std::string> report_files;
    std::string report_json;
    report->add_option("files", report_files, "selection.json files");
    report->add_option("--json", report_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "tagcos: usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    }

    try {
        if (threads) tagcos::set_thread_count(threads);

        if (gen->parsed()) {
            if (per_cluster.size() == 1) per_cluster.assign(blob.n_clusters, per_cluster.front());
            blob.samples_per_cluster = per_cluster;
            const auto data = tagcos::generate_blobs(blob);
            tagcos::write_blobs(data, gen_out);
            std::cout << "wrote " << data.features.n_samples() << " x " << data.features.dim() << " to " << gen_out
                      << '\n';
        } else if (project->parsed()) {
            std::vector<std::filesystem::path> paths(raw_files.begin(), raw_files.end());
            tagcos::run_project(paths, target_dim, project_seed, project_out, identity);
            std::cout << "wrote " << project_out << '\n';
        } else if (cluster->parsed()) {
            const auto out = tagcos::run_cluster(cluster_flags.resolve());
            std::cout << "wrote " << out.string() << '\n';
        } else if (select->parsed()) {
            const auto out = tagcos::run_select(select_flags.resolve());
            std::cout << "selected " << out.selection.indices.size() << " samples, global error "
                      << out.selection.global_error << "\nwrote " << out.selection_path.string() << '\n';
        } else if (baseline->parsed()) {
            const auto m = tagcos::parse_baseline_method(method);
            const auto out = tagcos::run_baseline(m, baseline_flags.resolve());
            std::cout << "selected " << out.selection.indices.size() << " samples, global error "
                      << out.selection.global_error << "\nwrote " << out.selection_path.string() << '\n';
        } else if (oracle->parsed()) {
            const auto j = tagcos::run_oracle(oracle_features, oracle_budget, oracle_lambda, !oracle_signed);
            if (!oracle_out.empty()) tagcos::write_json_file(j, oracle_out);
            std::cout << j.dump(2) << '\n';
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
            std::optional<std::filesystem::path> json_out;
            if (!report_json.empty()) json_out = report_json;
            std::cout << tagcos::run_report(paths, json_out);
        }
    } catch (const tagcos::Error& e) {
        std::cerr << "tagcos: " << e.what() << '\n';
        return e.kind() == tagcos::ErrorKind::usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "tagcos: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
