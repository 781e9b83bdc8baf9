#pragma once

#include <cstdint>
#include <string>

#include "gcondnet/bench.hpp"
#include "gcondnet/serialize.hpp"

namespace gcondnet {

/// Declarative experiment configuration; defaults match the standard
/// training settings (MLP 100-100-10, GCN 200-100, dropout 0.2/0.5, batch 8,
/// 10000 steps, patience 200, n_alpha 200, lr 1e-4, KNN k 5, SRD rel_dist
/// 0.05).
struct ExperimentConfig {
    std::string dataset_path;
    std::string label_column = "label";

    GraphConfig graph;
    ModelConfig model;
    MixingSchedule schedule;
    TrainConfig train;
    Precision precision = Precision::F32;

    int folds = 5;
    int repeats = 5;
    double val_fraction = 0.1;

    std::string output_dir = "runs";
    std::uint64_t master_seed = 42;
    int jobs = 1;
    int random_resamples = 5;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse and validate; unknown keys and out-of-range values are errors that
/// name the offending key path.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_json(const Json& j);

/// Fully resolved echo; re-parsing it yields an identical config.
Json config_to_json(const ExperimentConfig& cfg);

BenchSettings to_bench_settings(const ExperimentConfig& cfg);

}  // namespace gcondnet
