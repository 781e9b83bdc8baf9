#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "gcondnet/bench.hpp"
#include "gcondnet/config.hpp"
#include "gcondnet/serialize.hpp"
#include "gcondnet/synth.hpp"

namespace fs = std::filesystem;
using namespace gcondnet;

namespace {

fs::path resolve_out(const std::string& dir) {
    fs::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("GCONDNET_OUT_ROOT")) p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p;
}

int env_jobs(int cli_jobs) {
    if (const char* j = std::getenv("GCONDNET_JOBS")) return std::max(1, std::atoi(j));
    return cli_jobs;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void write_manifest(const fs::path& dir, const Json& resolved_config, const std::string& command,
                    double wall_seconds) {
    Json m;
    m["format_version"] = 1;
    m["version"] = GCONDNET_VERSION;
    m["command"] = command;
    m["wall_time_seconds"] = wall_seconds;
    m["config"] = resolved_config;
    write_json_file(m, (dir / "manifest.json").string());
}

ExperimentConfig load_config(const std::string& config_path) {
    if (!config_path.empty()) return parse_config(config_path);
    return ExperimentConfig{};
}

ModelSpec spec_from_name(const std::string& name, const ExperimentConfig& cfg) {
    ModelSpec s;
    s.name = name;
    s.graph = cfg.graph;
    s.schedule = cfg.schedule;
    if (name == "gcondnet-knn") {
        s.graph.kind = GraphKind::Knn;
    } else if (name == "gcondnet-srd") {
        s.graph.kind = GraphKind::Srd;
    } else if (name == "gcondnet-random") {
        s.graph.kind = GraphKind::Random;
    } else if (name.rfind("mlp-", 0) == 0) {
        s.use_gnn = false;
        s.init = init_kind_from_string(name.substr(4));
    } else {
        throw ConfigError("unknown model spec: " + name +
                          " (expected gcondnet-{knn|srd|random} or mlp-{kaiming|pca|nmf|wl})");
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GCondNet: graph-conditioned MLPs for small high-dimensional tabular data"};
    app.require_subcommand(1);

    // ---- version ----
    app.add_subcommand("version", "Print version")->callback([] {
        std::cout << GCONDNET_VERSION << "\n";
    });

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset CSV");
    std::string synth_out = "synthetic.csv";
    int synth_n = 100, synth_d = 1000, synth_inf = 10;
    std::uint64_t synth_seed = 42;
    bool synth_toy = false;
    synth->add_option("--out", synth_out, "Output CSV path");
    synth->add_option("--n", synth_n, "Samples");
    synth->add_option("--d", synth_d, "Features");
    synth->add_option("--informative", synth_inf, "Informative correlated features");
    synth->add_option("--seed", synth_seed, "Seed");
    synth->add_flag("--toy", synth_toy, "Emit the small separable toy set instead");
    synth->callback([&] {
        auto data = synth_toy ? make_toy_dataset(synth_n == 100 ? 40 : synth_n,
                                                 synth_d == 1000 ? 10 : synth_d, synth_seed)
                              : make_planted_dataset(synth_n, synth_d, synth_inf, synth_seed);
        save_csv(data, synth_out);
        std::cerr << "wrote " << synth_out << " (" << data.num_samples() << "x"
                  << data.num_features() << ")\n";
    });

    // ---- graphs ----
    auto* graphs_cmd = app.add_subcommand("graphs", "Build or inspect feature-graph bundles");
    graphs_cmd->require_subcommand(1);

    auto* gbuild = graphs_cmd->add_subcommand("build", "Build per-feature graphs from a dataset");
    std::string gb_data, gb_label = "label", gb_type = "knn", gb_out = "graphs.json";
    std::string gb_config;
    std::uint64_t gb_seed = 42;
    int gb_k = 5;
    double gb_rel = 0.05;
    gbuild->add_option("--data", gb_data, "Dataset CSV")->required();
    gbuild->add_option("--label-column", gb_label, "Label column name or index");
    gbuild->add_option("--graphs", gb_type, "Graph type: knn|srd|random");
    gbuild->add_option("--k", gb_k, "KNN neighbours");
    gbuild->add_option("--rel-dist", gb_rel, "SRD relative distance");
    gbuild->add_option("--seed", gb_seed, "Seed");
    gbuild->add_option("--out", gb_out, "Output bundle path");
    gbuild->callback([&] {
        Stopwatch sw;
        auto data = load_csv(gb_data, gb_label);
        auto norm = zscore_fit(data.matrix);
        GraphBundle bundle;
        bundle.config.kind = graph_kind_from_string(gb_type);
        bundle.config.k = gb_k;
        bundle.config.rel_dist = gb_rel;
        bundle.seed = gb_seed;
        bundle.graphs = build_feature_graphs(zscore_apply(norm, data.matrix), bundle.config, gb_seed);
        write_json_file(graph_bundle_to_json(bundle), gb_out);
        std::cerr << "wrote " << bundle.graphs.size() << " graphs to " << gb_out << " in "
                  << sw.seconds() << "s\n";
    });

    auto* gstats = graphs_cmd->add_subcommand("stats", "Summarize a graph bundle");
    std::string gs_bundle, gs_out = "graph_stats.json";
    gstats->add_option("--bundle", gs_bundle, "Bundle path")->required();
    gstats->add_option("--out", gs_out, "Output stats path");
    gstats->callback([&] {
        auto bundle = graph_bundle_from_json(read_json_file(gs_bundle));
        double mean = 0.0, frac = 0.0, mean_sq = 0.0;
        for (const auto& g : bundle.graphs) {
            auto s = graph_stats(g);
            mean += s.degree_mean;
            mean_sq += s.degree_std * s.degree_std + s.degree_mean * s.degree_mean;
            frac += s.edge_fraction;
        }
        const double d = double(bundle.graphs.size());
        Json j;
        j["format_version"] = 1;
        j["graph_count"] = bundle.graphs.size();
        j["degree_mean"] = mean / d;
        j["degree_std"] = std::sqrt(std::max(0.0, mean_sq / d - (mean / d) * (mean / d)));
        j["edge_fraction_percent"] = frac / d;
        write_json_file(j, gs_out);
        std::cerr << "wrote " << gs_out << "\n";
    });

    // ---- init ----
    auto* init_cmd = app.add_subcommand("init", "Emit a first-layer initializer checkpoint");
    std::string in_data, in_label = "label", in_scheme = "kaiming", in_out = "init.json";
    std::uint64_t in_seed = 42;
    int in_width = 100;
    init_cmd->add_option("--data", in_data, "Dataset CSV")->required();
    init_cmd->add_option("--label-column", in_label, "Label column name or index");
    init_cmd->add_option("--scheme", in_scheme, "kaiming|pca|nmf|wl");
    init_cmd->add_option("--width", in_width, "First hidden layer width");
    init_cmd->add_option("--seed", in_seed, "Seed");
    init_cmd->add_option("--out", in_out, "Output checkpoint path");
    init_cmd->callback([&] {
        auto data = load_csv(in_data, in_label);
        auto norm = zscore_fit(data.matrix);
        auto xn = zscore_apply(norm, data.matrix);
        std::vector<FeatureGraph> graphs;
        const InitKind kind = init_kind_from_string(in_scheme);
        if (kind == InitKind::Wl) {
            GraphConfig gc;
            gc.kind = GraphKind::Srd;
            graphs = build_feature_graphs(xn, gc, in_seed);
        }
        auto w = first_layer_init(kind, xn, graphs, in_width, in_seed);
        write_json_file(init_checkpoint_to_json(in_scheme, w), in_out);
        std::cerr << "wrote " << in_out << "\n";
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train one model on the first CV split");
    std::string tr_config, tr_data, tr_label, tr_graphs, tr_out, tr_precision, tr_init_ckpt;
    long tr_max_steps = -1, tr_patience = -1, tr_n_alpha = -1;
    int tr_batch = -1, tr_k = -1;
    double tr_lr = -1, tr_rel = -1, tr_fixed_alpha = -1;
    std::int64_t tr_seed = -1;
    bool tr_mlp = false;
    train_cmd->add_option("--config", tr_config, "Experiment config JSON");
    train_cmd->add_option("--data", tr_data, "Dataset CSV");
    train_cmd->add_option("--label-column", tr_label, "Label column name or index");
    train_cmd->add_option("--graphs", tr_graphs, "knn|srd|random");
    train_cmd->add_option("--k", tr_k, "KNN neighbours");
    train_cmd->add_option("--rel-dist", tr_rel, "SRD relative distance");
    train_cmd->add_option("--n-alpha", tr_n_alpha, "Mixing decay horizon");
    train_cmd->add_option("--fixed-alpha", tr_fixed_alpha, "Fixed mixing coefficient");
    train_cmd->add_option("--max-steps", tr_max_steps, "Max training steps");
    train_cmd->add_option("--batch-size", tr_batch, "Batch size");
    train_cmd->add_option("--patience", tr_patience, "Early-stopping patience (steps)");
    train_cmd->add_option("--lr", tr_lr, "Learning rate");
    train_cmd->add_option("--seed", tr_seed, "Seed");
    train_cmd->add_option("--precision", tr_precision, "f32|f64");
    train_cmd->add_option("--init-checkpoint", tr_init_ckpt, "First-layer init checkpoint (MLP mode)");
    train_cmd->add_flag("--mlp", tr_mlp, "Train a plain MLP (no GNN)");
    train_cmd->add_option("--out", tr_out, "Run directory");
    train_cmd->callback([&] {
        Stopwatch sw;
        auto cfg = load_config(tr_config);
        if (!tr_data.empty()) cfg.dataset_path = tr_data;
        if (!tr_label.empty()) cfg.label_column = tr_label;
        if (!tr_graphs.empty()) cfg.graph.kind = graph_kind_from_string(tr_graphs);
        if (tr_k > 0) cfg.graph.k = tr_k;
        if (tr_rel > 0) cfg.graph.rel_dist = tr_rel;
        if (tr_n_alpha >= 0) cfg.schedule.n_alpha = tr_n_alpha;
        if (tr_fixed_alpha >= 0) {
            cfg.schedule.mode = MixingSchedule::Mode::Fixed;
            cfg.schedule.fixed_alpha = tr_fixed_alpha;
        }
        if (tr_max_steps > 0) cfg.train.max_steps = tr_max_steps;
        if (tr_batch > 0) cfg.train.batch_size = tr_batch;
        if (tr_patience > 0) cfg.train.patience = tr_patience;
        if (tr_lr > 0) cfg.train.lr = tr_lr;
        if (tr_seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(tr_seed);
        if (!tr_precision.empty())
            cfg.precision = tr_precision == "f64" ? Precision::F64 : Precision::F32;
        if (!tr_out.empty()) cfg.output_dir = tr_out;
        if (cfg.dataset_path.empty())
            throw CLI::ValidationError("--data", "dataset path required (flag or config)");

        auto data = load_csv(cfg.dataset_path, cfg.label_column);
        auto plan = stratified_splits(data.labels, cfg.folds, 1, cfg.val_fraction, cfg.master_seed);

        ModelSpec spec;
        spec.name = tr_mlp || !tr_init_ckpt.empty() ? "mlp" : "gcondnet";
        spec.use_gnn = !(tr_mlp || !tr_init_ckpt.empty());
        spec.graph = cfg.graph;
        spec.schedule = cfg.schedule;
        auto settings = to_bench_settings(cfg);

        const auto dir = resolve_out(cfg.output_dir);
        if (!tr_init_ckpt.empty()) {
            // plain-MLP run from a precomputed first layer
            auto w0 = init_checkpoint_from_json(read_json_file(tr_init_ckpt));
            cfg.model.mlp_widths[0] = static_cast<int>(w0.rows());
            settings.model = cfg.model;
            spec.first_layer = std::move(w0);
        }
        auto out = run_split(data, spec, plan.splits[0], settings, cfg.master_seed, 0);

        write_json_file(config_to_json(cfg), (dir / "config.json").string());
        out.history.write_csv((dir / "history.csv").string());
        write_json_file(trained_model_to_json(out.mlp, out.first_layer),
                        (dir / "checkpoint.json").string());
        Json metrics;
        metrics["format_version"] = 1;
        metrics["test_balanced_accuracy"] = out.result.test_bacc;
        metrics["val_balanced_accuracy"] = out.result.val_bacc;
        metrics["best_val_loss"] = out.result.best_val_loss;
        metrics["steps"] = out.result.steps;
        write_json_file(metrics, (dir / "metrics.json").string());
        write_manifest(dir, config_to_json(cfg), "train", sw.seconds());
        std::cerr << "test balanced accuracy " << out.result.test_bacc << " after "
                  << out.result.steps << " steps\n";
    });

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "Cross-validation benchmark over model specs");
    std::string be_config, be_data, be_label, be_models = "gcondnet-knn,mlp-kaiming", be_out;
    std::int64_t be_seed = -1;
    int be_jobs = 1;
    bench_cmd->add_option("--config", be_config, "Experiment config JSON");
    bench_cmd->add_option("--data", be_data, "Dataset CSV");
    bench_cmd->add_option("--label-column", be_label, "Label column name or index");
    bench_cmd->add_option("--models", be_models, "Comma-separated model specs");
    bench_cmd->add_option("--seed", be_seed, "Master seed");
    bench_cmd->add_option("--jobs", be_jobs, "Parallel runs");
    bench_cmd->add_option("--out", be_out, "Output directory");
    bench_cmd->callback([&] {
        Stopwatch sw;
        auto cfg = load_config(be_config);
        if (!be_data.empty()) cfg.dataset_path = be_data;
        if (!be_label.empty()) cfg.label_column = be_label;
        if (be_seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(be_seed);
        if (!be_out.empty()) cfg.output_dir = be_out;
        cfg.jobs = env_jobs(be_jobs);
        if (cfg.dataset_path.empty())
            throw CLI::ValidationError("--data", "dataset path required (flag or config)");

        auto data = load_csv(cfg.dataset_path, cfg.label_column);
        auto plan = stratified_splits(data.labels, cfg.folds, cfg.repeats, cfg.val_fraction,
                                      cfg.master_seed);
        std::vector<ModelSpec> specs;
        std::stringstream ss(be_models);
        std::string name;
        while (std::getline(ss, name, ',')) specs.push_back(spec_from_name(name, cfg));

        auto report = run_benchmark(data, specs, plan, to_bench_settings(cfg));

        const auto dir = resolve_out(cfg.output_dir);
        write_json_file(report_to_json(report), (dir / "report.json").string());
        write_report_csv(report, (dir / "report.csv").string());
        write_json_file(split_plan_to_json(plan), (dir / "splits.json").string());
        write_manifest(dir, config_to_json(cfg), "bench", sw.seconds());
        for (const auto& a : report.aggregates)
            std::cerr << a.spec << ": " << a.mean << " +/- " << a.stddev << " (" << a.runs
                      << " runs)\n";
    });

    // ---- curves ----
    auto* curves_cmd = app.add_subcommand("curves", "Fixed-vs-decayed alpha loss-curve study");
    std::string cu_config, cu_data, cu_label, cu_alphas = "0", cu_out;
    bool cu_no_decay = false;
    std::int64_t cu_seed = -1;
    curves_cmd->add_option("--config", cu_config, "Experiment config JSON");
    curves_cmd->add_option("--data", cu_data, "Dataset CSV");
    curves_cmd->add_option("--label-column", cu_label, "Label column name or index");
    curves_cmd->add_option("--alphas", cu_alphas, "Comma-separated fixed alpha values");
    curves_cmd->add_flag("--no-decay", cu_no_decay, "Skip the decaying-alpha configuration");
    curves_cmd->add_option("--seed", cu_seed, "Master seed");
    curves_cmd->add_option("--out", cu_out, "Output directory");
    curves_cmd->callback([&] {
        Stopwatch sw;
        auto cfg = load_config(cu_config);
        if (!cu_data.empty()) cfg.dataset_path = cu_data;
        if (!cu_label.empty()) cfg.label_column = cu_label;
        if (cu_seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(cu_seed);
        if (!cu_out.empty()) cfg.output_dir = cu_out;
        if (cfg.dataset_path.empty())
            throw CLI::ValidationError("--data", "dataset path required (flag or config)");

        auto data = load_csv(cfg.dataset_path, cfg.label_column);
        auto plan = stratified_splits(data.labels, cfg.folds, cfg.repeats, cfg.val_fraction,
                                      cfg.master_seed);
        std::vector<double> alphas;
        std::stringstream ss(cu_alphas);
        std::string a;
        while (std::getline(ss, a, ',')) alphas.push_back(std::stod(a));

        auto curves = curve_study(data, alphas, !cu_no_decay, cfg.graph, plan,
                                  to_bench_settings(cfg));
        const auto dir = resolve_out(cfg.output_dir);
        write_curves_csv(curves, (dir / "curves.csv").string());
        write_manifest(dir, config_to_json(cfg), "curves", sw.seconds());
        std::cerr << "wrote " << (dir / "curves.csv") << "\n";
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
