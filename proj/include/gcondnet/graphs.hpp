#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "gcondnet/sparse.hpp"

namespace gcondnet {

/// One per-feature sample graph: N_train nodes carrying the (normalized)
/// feature column, undirected edges stored once as (u, v) with u < v.
struct FeatureGraph {
    int node_count = 0;
    Eigen::VectorXd values;
    std::vector<std::pair<int, int>> edges;  // sorted, deduplicated, no self-loops
};

struct GraphStats {
    double degree_mean = 0.0;
    double degree_std = 0.0;
    double edge_fraction = 0.0;  // percent of the complete-graph edge count
};

/// diag(values) as a sparse matrix (the one-hot node-feature matrix).
CsrMatrix<double> node_feature_matrix(const FeatureGraph& g);

/// Per-node candidate lists: the k nodes minimizing |values[u] - values[v]|,
/// ties broken by lower index. Exposed separately so the pre-symmetrization
/// out-degree contract can be checked directly.
std::vector<std::vector<int>> knn_candidates(const Eigen::VectorXd& values, int k);

FeatureGraph build_knn_graph(const Eigen::VectorXd& values, int k);

/// Linear-interpolation percentile of an unsorted vector, q in [0, 100].
double percentile(const Eigen::VectorXd& values, double q);

/// SRD candidate sets: all v != u with |values[u] - values[v]| <= dist, where
/// dist = rel_dist * |p95 - p5|.
std::vector<std::vector<int>> srd_candidates(const Eigen::VectorXd& values, double rel_dist);

FeatureGraph build_srd_graph(const Eigen::VectorXd& values, double rel_dist, int max_degree,
                             std::mt19937_64& rng);

FeatureGraph build_random_graph(int n, double mu, double sigma, std::mt19937_64& rng);

GraphStats graph_stats(const FeatureGraph& g);

/// A_hat = D^{-1/2} (A + I) D^{-1/2}, the symmetric-normalized adjacency with
/// self-loops, in CSR layout.
CsrMatrix<double> normalize_adjacency(const FeatureGraph& g);

enum class GraphKind { Knn, Srd, Random };

struct GraphConfig {
    GraphKind kind = GraphKind::Knn;
    int k = 5;
    double rel_dist = 0.05;
    int max_degree = 25;
    double mu = 0.08;
    double sigma = 0.03;
};

/// Build one graph per column of the (normalized) training matrix. Graph j
/// uses an rng stream derived from seed and j.
std::vector<FeatureGraph> build_feature_graphs(const Eigen::MatrixXd& train_matrix,
                                               const GraphConfig& config, std::uint64_t seed);

}  // namespace gcondnet
