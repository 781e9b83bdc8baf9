#include "gcondnet/config.hpp"

#include <set>

namespace gcondnet {

namespace {

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config key: " + (path.empty() ? key : path + "." + key));
}

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

void require_range(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("config value out of range: " + key + " (" + what + ")");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig cfg;
    check_keys(j, "", {"format_version", "dataset", "graph", "model", "schedule", "train", "split",
                       "output_dir", "seed", "jobs", "random_resamples"});

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, "dataset", {"path", "label_column"});
        cfg.dataset_path = get_or<std::string>(d, "path", "");
        cfg.label_column = get_or<std::string>(d, "label_column", cfg.label_column);
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        check_keys(g, "graph", {"type", "k", "rel_dist", "max_degree", "mu", "sigma"});
        cfg.graph.kind = graph_kind_from_string(get_or<std::string>(g, "type", "knn"));
        cfg.graph.k = get_or(g, "k", cfg.graph.k);
        cfg.graph.rel_dist = get_or(g, "rel_dist", cfg.graph.rel_dist);
        cfg.graph.max_degree = get_or(g, "max_degree", cfg.graph.max_degree);
        cfg.graph.mu = get_or(g, "mu", cfg.graph.mu);
        cfg.graph.sigma = get_or(g, "sigma", cfg.graph.sigma);
        require_range(cfg.graph.k >= 1, "graph.k", ">= 1");
        require_range(cfg.graph.rel_dist > 0, "graph.rel_dist", "> 0");
        require_range(cfg.graph.max_degree >= 1, "graph.max_degree", ">= 1");
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, "model",
                   {"mlp_widths", "gcn_widths", "mlp_dropout", "gcn_dropout", "leaky_slope"});
        cfg.model.mlp_widths = get_or(m, "mlp_widths", cfg.model.mlp_widths);
        cfg.model.gcn_widths = get_or(m, "gcn_widths", cfg.model.gcn_widths);
        cfg.model.mlp_dropout = get_or(m, "mlp_dropout", cfg.model.mlp_dropout);
        cfg.model.gcn_dropout = get_or(m, "gcn_dropout", cfg.model.gcn_dropout);
        cfg.model.leaky_slope = get_or(m, "leaky_slope", cfg.model.leaky_slope);
        require_range(cfg.model.mlp_dropout >= 0 && cfg.model.mlp_dropout < 1, "model.mlp_dropout",
                      "in [0, 1)");
        require_range(cfg.model.gcn_dropout >= 0 && cfg.model.gcn_dropout < 1, "model.gcn_dropout",
                      "in [0, 1)");
        require_range(!cfg.model.mlp_widths.empty(), "model.mlp_widths", "non-empty");
        require_range(cfg.model.gcn_widths.size() == 2, "model.gcn_widths", "two layers");
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        check_keys(s, "schedule", {"mode", "n_alpha", "fixed_alpha"});
        const std::string mode = get_or<std::string>(s, "mode", "linear");
        if (mode == "linear")
            cfg.schedule.mode = MixingSchedule::Mode::LinearDecay;
        else if (mode == "fixed")
            cfg.schedule.mode = MixingSchedule::Mode::Fixed;
        else
            throw ConfigError("config value out of range: schedule.mode (linear|fixed)");
        cfg.schedule.n_alpha = get_or(s, "n_alpha", cfg.schedule.n_alpha);
        cfg.schedule.fixed_alpha = get_or(s, "fixed_alpha", cfg.schedule.fixed_alpha);
        require_range(cfg.schedule.n_alpha >= 0, "schedule.n_alpha", ">= 0");
        require_range(cfg.schedule.fixed_alpha >= 0 && cfg.schedule.fixed_alpha <= 1,
                      "schedule.fixed_alpha", "in [0, 1]");
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train",
                   {"max_steps", "batch_size", "patience", "lr", "weight_decay", "precision"});
        cfg.train.max_steps = get_or(t, "max_steps", cfg.train.max_steps);
        cfg.train.batch_size = get_or(t, "batch_size", cfg.train.batch_size);
        cfg.train.patience = get_or(t, "patience", cfg.train.patience);
        cfg.train.lr = get_or(t, "lr", cfg.train.lr);
        cfg.train.weight_decay = get_or(t, "weight_decay", cfg.train.weight_decay);
        const std::string prec = get_or<std::string>(t, "precision", "f32");
        if (prec == "f32")
            cfg.precision = Precision::F32;
        else if (prec == "f64")
            cfg.precision = Precision::F64;
        else
            throw ConfigError("config value out of range: train.precision (f32|f64)");
        require_range(cfg.train.max_steps > 0, "train.max_steps", "> 0");
        require_range(cfg.train.batch_size > 0, "train.batch_size", "> 0");
        require_range(cfg.train.patience > 0, "train.patience", "> 0");
        require_range(cfg.train.lr > 0, "train.lr", "> 0");
        require_range(cfg.train.weight_decay >= 0, "train.weight_decay", ">= 0");
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        check_keys(s, "split", {"folds", "repeats", "val_fraction"});
        cfg.folds = get_or(s, "folds", cfg.folds);
        cfg.repeats = get_or(s, "repeats", cfg.repeats);
        cfg.val_fraction = get_or(s, "val_fraction", cfg.val_fraction);
        require_range(cfg.folds >= 2, "split.folds", ">= 2");
        require_range(cfg.repeats >= 1, "split.repeats", ">= 1");
        require_range(cfg.val_fraction > 0 && cfg.val_fraction < 1, "split.val_fraction",
                      "in (0, 1)");
    }
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.master_seed = get_or(j, "seed", cfg.master_seed);
    cfg.jobs = get_or(j, "jobs", cfg.jobs);
    cfg.random_resamples = get_or(j, "random_resamples", cfg.random_resamples);
    require_range(cfg.jobs >= 1, "jobs", ">= 1");
    require_range(cfg.random_resamples >= 1, "random_resamples", ">= 1");
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    Json j;
    try {
        j = read_json_file(path);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["format_version"] = 1;
    j["dataset"] = {{"path", cfg.dataset_path}, {"label_column", cfg.label_column}};
    j["graph"] = {{"type", graph_kind_to_string(cfg.graph.kind)},
                  {"k", cfg.graph.k},
                  {"rel_dist", cfg.graph.rel_dist},
                  {"max_degree", cfg.graph.max_degree},
                  {"mu", cfg.graph.mu},
                  {"sigma", cfg.graph.sigma}};
    j["model"] = {{"mlp_widths", cfg.model.mlp_widths},
                  {"gcn_widths", cfg.model.gcn_widths},
                  {"mlp_dropout", cfg.model.mlp_dropout},
                  {"gcn_dropout", cfg.model.gcn_dropout},
                  {"leaky_slope", cfg.model.leaky_slope}};
    j["schedule"] = {
        {"mode", cfg.schedule.mode == MixingSchedule::Mode::LinearDecay ? "linear" : "fixed"},
        {"n_alpha", cfg.schedule.n_alpha},
        {"fixed_alpha", cfg.schedule.fixed_alpha}};
    j["train"] = {{"max_steps", cfg.train.max_steps},
                  {"batch_size", cfg.train.batch_size},
                  {"patience", cfg.train.patience},
                  {"lr", cfg.train.lr},
                  {"weight_decay", cfg.train.weight_decay},
                  {"precision", cfg.precision == Precision::F32 ? "f32" : "f64"}};
    j["split"] = {{"folds", cfg.folds}, {"repeats", cfg.repeats}, {"val_fraction", cfg.val_fraction}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.master_seed;
    j["jobs"] = cfg.jobs;
    j["random_resamples"] = cfg.random_resamples;
    return j;
}

BenchSettings to_bench_settings(const ExperimentConfig& cfg) {
    BenchSettings s;
    s.train = cfg.train;
    s.model = cfg.model;
    s.precision = cfg.precision;
    s.jobs = cfg.jobs;
    s.master_seed = cfg.master_seed;
    s.random_resamples = cfg.random_resamples;
    return s;
}

}  // namespace gcondnet
