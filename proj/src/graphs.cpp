#include "gcondnet/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "gcondnet/rng.hpp"

namespace gcondnet {

namespace {

void canonicalize_edges(std::vector<std::pair<int, int>>& edges) {
    for (auto& e : edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

CsrMatrix<double> node_feature_matrix(const FeatureGraph& g) {
    std::vector<std::pair<std::pair<int, int>, double>> trip;
    trip.reserve(g.node_count);
    for (int i = 0; i < g.node_count; ++i) trip.push_back({{i, i}, g.values[i]});
    return CsrMatrix<double>::from_sorted_triplets(g.node_count, g.node_count, trip);
}

std::vector<std::vector<int>> knn_candidates(const Eigen::VectorXd& values, int k) {
    const int n = static_cast<int>(values.size());
    if (n <= k) throw std::invalid_argument("knn_candidates: need more nodes than k");
    std::vector<std::vector<int>> cand(n);
    std::vector<int> others(n - 1);
    for (int u = 0; u < n; ++u) {
        int m = 0;
        for (int v = 0; v < n; ++v)
            if (v != u) others[m++] = v;
        std::partial_sort(others.begin(), others.begin() + k, others.end(), [&](int a, int b) {
            const double da = std::abs(values[u] - values[a]);
            const double db = std::abs(values[u] - values[b]);
            return da != db ? da < db : a < b;
        });
        cand[u].assign(others.begin(), others.begin() + k);
    }
    return cand;
}

FeatureGraph build_knn_graph(const Eigen::VectorXd& values, int k) {
    FeatureGraph g;
    g.node_count = static_cast<int>(values.size());
    g.values = values;
    auto cand = knn_candidates(values, k);
    for (int u = 0; u < g.node_count; ++u)
        for (int v : cand[u]) g.edges.emplace_back(u, v);
    canonicalize_edges(g.edges);
    return g;
}

double percentile(const Eigen::VectorXd& values, double q) {
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q / 100.0 * double(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - double(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::vector<std::vector<int>> srd_candidates(const Eigen::VectorXd& values, double rel_dist) {
    const int n = static_cast<int>(values.size());
    const double dist = rel_dist * std::abs(percentile(values, 95.0) - percentile(values, 5.0));

    // sort once, sweep a window; candidates are contiguous in value order
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] != values[b] ? values[a] < values[b] : a < b; });

    std::vector<std::vector<int>> cand(n);
    int lo = 0, hi = 0;
    for (int i = 0; i < n; ++i) {
        const double v = values[order[i]];
        while (values[order[lo]] < v - dist) ++lo;
        while (hi < n && values[order[hi]] <= v + dist) ++hi;
        auto& c = cand[order[i]];
        c.reserve(hi - lo - 1);
        for (int j = lo; j < hi; ++j)
            if (order[j] != order[i]) c.push_back(order[j]);
        std::sort(c.begin(), c.end());
    }
    return cand;
}

FeatureGraph build_srd_graph(const Eigen::VectorXd& values, double rel_dist, int max_degree,
                             std::mt19937_64& rng) {
    const int n = static_cast<int>(values.size());
    if (n < 2) throw std::invalid_argument("build_srd_graph: need at least 2 nodes");

    FeatureGraph g;
    g.node_count = n;
    g.values = values;

    auto cand = srd_candidates(values, rel_dist);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int u = 0; u < n; ++u) {
        const double p = double(cand[u].size()) / double(n);
        if (unif(rng) < p)
            for (int v : cand[u]) g.edges.emplace_back(u, v);
    }
    canonicalize_edges(g.edges);

    // degree cap: prune uniformly random incident edges of over-degree nodes
    std::vector<int> degree(n, 0);
    std::set<std::pair<int, int>> edge_set(g.edges.begin(), g.edges.end());
    for (const auto& e : g.edges) {
        ++degree[e.first];
        ++degree[e.second];
    }
    for (int u = 0; u < n; ++u) {
        while (degree[u] > max_degree) {
            std::vector<std::pair<int, int>> incident;
            for (const auto& e : edge_set)
                if (e.first == u || e.second == u) incident.push_back(e);
            std::uniform_int_distribution<std::size_t> pick(0, incident.size() - 1);
            const auto e = incident[pick(rng)];
            edge_set.erase(e);
            --degree[e.first];
            --degree[e.second];
        }
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
    return g;
}

FeatureGraph build_random_graph(int n, double mu, double sigma, std::mt19937_64& rng) {
    if (n < 2) throw std::invalid_argument("build_random_graph: need at least 2 nodes");
    FeatureGraph g;
    g.node_count = n;
    g.values = Eigen::VectorXd::Zero(n);

    std::normal_distribution<double> normal(mu, sigma);
    const double p = std::clamp(normal(rng), 0.0, 1.0);
    const long long total = static_cast<long long>(n) * (n - 1) / 2;
    const long long m = std::llround(p * double(total));

    std::vector<std::pair<int, int>> all;
    all.reserve(total);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) all.emplace_back(u, v);
    std::shuffle(all.begin(), all.end(), rng);
    g.edges.assign(all.begin(), all.begin() + m);
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

GraphStats graph_stats(const FeatureGraph& g) {
    const int n = g.node_count;
    if (n < 2) throw std::invalid_argument("graph_stats: need at least 2 nodes");
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
    for (const auto& e : g.edges) {
        degree[e.first] += 1.0;
        degree[e.second] += 1.0;
    }
    GraphStats s;
    s.degree_mean = degree.mean();
    s.degree_std = std::sqrt((degree.array() - s.degree_mean).square().mean());
    s.edge_fraction = 100.0 * double(g.edges.size()) / (double(n) * (n - 1) / 2.0);
    return s;
}

CsrMatrix<double> normalize_adjacency(const FeatureGraph& g) {
    const int n = g.node_count;
    Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);  // self-loops included
    for (const auto& e : g.edges) {
        deg[e.first] += 1.0;
        deg[e.second] += 1.0;
    }
    const Eigen::VectorXd dinv = deg.array().rsqrt();

    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (int i = 0; i < n; ++i) rows[i].push_back({i, dinv[i] * dinv[i]});
    for (const auto& e : g.edges) {
        const double w = dinv[e.first] * dinv[e.second];
        rows[e.first].push_back({e.second, w});
        rows[e.second].push_back({e.first, w});
    }
    std::vector<std::pair<std::pair<int, int>, double>> trip;
    trip.reserve(g.edges.size() * 2 + n);
    for (int i = 0; i < n; ++i) {
        std::sort(rows[i].begin(), rows[i].end());
        for (const auto& [j, w] : rows[i]) trip.push_back({{i, j}, w});
    }
    return CsrMatrix<double>::from_sorted_triplets(n, n, trip);
}

std::vector<FeatureGraph> build_feature_graphs(const Eigen::MatrixXd& train_matrix,
                                               const GraphConfig& config, std::uint64_t seed) {
    const int d = static_cast<int>(train_matrix.cols());
    std::vector<FeatureGraph> graphs;
    graphs.reserve(d);
    for (int j = 0; j < d; ++j) {
        auto rng = std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(j)));
        switch (config.kind) {
            case GraphKind::Knn:
                graphs.push_back(build_knn_graph(train_matrix.col(j), config.k));
                break;
            case GraphKind::Srd:
                graphs.push_back(build_srd_graph(train_matrix.col(j), config.rel_dist,
                                                 config.max_degree, rng));
                break;
            case GraphKind::Random: {
                auto g = build_random_graph(static_cast<int>(train_matrix.rows()), config.mu,
                                            config.sigma, rng);
                g.values = train_matrix.col(j);
                graphs.push_back(std::move(g));
                break;
            }
        }
    }
    return graphs;
}

}  // namespace gcondnet
