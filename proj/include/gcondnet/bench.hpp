#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcondnet/dataio.hpp"
#include "gcondnet/graphs.hpp"
#include "gcondnet/initschemes.hpp"
#include "gcondnet/model.hpp"
#include "gcondnet/train.hpp"

namespace gcondnet {

/// Unweighted mean of per-class recall.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

enum class Precision { F32, F64 };

struct ModelSpec {
    std::string name;
    bool use_gnn = true;  // false: plain MLP with `init` first layer
    GraphConfig graph;
    InitKind init = InitKind::Kaiming;
    MixingSchedule schedule;
    // Optional precomputed first layer (MLP mode); bypasses `init`.
    std::optional<Eigen::MatrixXd> first_layer;
};

struct RunResult {
    std::string spec;
    int split_id = 0;
    int resample = 0;  // random-graph resample index, 0 otherwise
    std::uint64_t seed = 0;
    double test_bacc = 0.0;
    double val_bacc = 0.0;
    double best_val_loss = 0.0;
    long steps = 0;
};

struct Aggregate {
    std::string spec;
    double mean = 0.0;
    double stddev = 0.0;  // population std over runs
    int runs = 0;
    double rank = 0.0;  // 1 = highest mean; ties averaged
};

struct BenchmarkReport {
    std::vector<RunResult> rows;
    std::vector<Aggregate> aggregates;
};

struct BenchSettings {
    TrainConfig train;
    ModelConfig model;
    Precision precision = Precision::F32;
    int jobs = 1;
    std::uint64_t master_seed = 42;
    int random_resamples = 5;  // graph resamples per split for random graphs
    bool keep_histories = false;
};

/// One run per (spec, split[, resample]); deterministic given master_seed,
/// independent of `jobs`.
BenchmarkReport run_benchmark(const TabularDataset& data, const std::vector<ModelSpec>& specs,
                              const SplitPlan& plan, const BenchSettings& settings,
                              std::vector<History>* histories = nullptr);

/// Fill report.aggregates with per-spec mean/std and competition ranks.
void aggregate(BenchmarkReport& report);

struct CurveResult {
    std::string name;  // "alpha_0.2" or "decay"
    std::vector<double> train_loss;  // per-step mean over splits
    std::vector<double> val_loss;
};

/// Per-alpha loss curves averaged over the split plan; early stopping is
/// disabled so every run covers all max_steps.
std::vector<CurveResult> curve_study(const TabularDataset& data,
                                     const std::vector<double>& fixed_alphas, bool include_decay,
                                     const GraphConfig& graph, const SplitPlan& plan,
                                     const BenchSettings& settings);

void write_curves_csv(const std::vector<CurveResult>& curves, const std::string& path);

/// Train on one split; used by the `train` CLI subcommand and the benchmark.
struct SplitRunOutput {
    RunResult result;
    History history;
    MlpParams<double> mlp;  // trained predictor, double precision copy
    Eigen::MatrixXd first_layer;
};

SplitRunOutput run_split(const TabularDataset& data, const ModelSpec& spec, const Split& split,
                         const BenchSettings& settings, std::uint64_t run_seed, int resample);

}  // namespace gcondnet
