#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "gcondnet/bench.hpp"
#include "gcondnet/dataio.hpp"
#include "gcondnet/graphs.hpp"

namespace gcondnet {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const Json& j);

struct GraphBundle {
    GraphConfig config;
    std::uint64_t seed = 0;
    std::vector<FeatureGraph> graphs;
};

Json graph_bundle_to_json(const GraphBundle& bundle);
GraphBundle graph_bundle_from_json(const Json& j);

/// Versioned named-tensor checkpoint of a trained predictor (first layer,
/// MLP weights, batch-norm state).
Json trained_model_to_json(const MlpParams<double>& mlp, const Eigen::MatrixXd& first_layer);
void trained_model_from_json(const Json& j, MlpParams<double>& mlp, Eigen::MatrixXd& first_layer);

/// First-layer initializer checkpoint, consumable by `train --init-checkpoint`.
Json init_checkpoint_to_json(const std::string& scheme, const Eigen::MatrixXd& w);
Eigen::MatrixXd init_checkpoint_from_json(const Json& j, std::string* scheme = nullptr);

Json report_to_json(const BenchmarkReport& report);
void write_report_csv(const BenchmarkReport& report, const std::string& path);

std::string graph_kind_to_string(GraphKind k);
GraphKind graph_kind_from_string(const std::string& s);

void write_json_file(const Json& j, const std::string& path);
Json read_json_file(const std::string& path);

}  // namespace gcondnet
