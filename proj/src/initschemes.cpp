#include "gcondnet/initschemes.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gcondnet/rng.hpp"

namespace gcondnet {

InitKind init_kind_from_string(const std::string& s) {
    if (s == "kaiming") return InitKind::Kaiming;
    if (s == "pca") return InitKind::Pca;
    if (s == "nmf") return InitKind::Nmf;
    if (s == "wl") return InitKind::Wl;
    throw std::invalid_argument("unknown init scheme: " + s);
}

std::string to_string(InitKind k) {
    switch (k) {
        case InitKind::Kaiming: return "kaiming";
        case InitKind::Pca: return "pca";
        case InitKind::Nmf: return "nmf";
        case InitKind::Wl: return "wl";
    }
    return "?";
}

Eigen::MatrixXd kaiming_init(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / double(cols)));
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Eigen::MatrixXd rescale_to_kaiming(const Eigen::MatrixXd& w, std::mt19937_64& rng) {
    const int cols = static_cast<int>(w.cols());
    const double target = std::sqrt(2.0 / double(cols));
    Eigen::MatrixXd out = w;
    for (int i = 0; i < out.rows(); ++i) {
        Eigen::RowVectorXd row = out.row(i);
        const double mean = row.mean();
        row.array() -= mean;
        double std = std::sqrt(row.array().square().mean());
        // relative floor: a constant row centres to FP residue, not exact zero
        if (std <= 1e-12 * std::max(1.0, std::abs(mean))) {
            row = kaiming_init(1, cols, rng);
            row.array() -= row.mean();
            std = std::sqrt(row.array().square().mean());
        }
        out.row(i) = row * (target / std);
    }
    return out;
}

PcaInit pca_init(const Eigen::MatrixXd& x_train, int k, std::mt19937_64& rng) {
    const int d = static_cast<int>(x_train.cols());
    Eigen::MatrixXd centred = x_train.rowwise() - x_train.colwise().mean();
    if (centred.norm() == 0.0) throw std::invalid_argument("pca_init: all-zero matrix after centring");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > tol) ++rank;

    PcaInit result;
    result.w.resize(k, d);
    const int take = std::min(k, rank);
    result.w.topRows(take) = svd.matrixV().leftCols(take).transpose();
    for (int i = take; i < k; ++i) {
        result.w.row(i) = kaiming_init(1, d, rng);
        result.padded_rows.push_back(i);
    }
    result.raw = result.w;
    result.w = rescale_to_kaiming(result.w, rng);
    return result;
}

NmfResult nmf_factorize(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng, int iterations) {
    if ((x.array() < 0.0).any()) throw std::invalid_argument("nmf_factorize: negative entries");
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    const double eps = 1e-12;

    std::uniform_real_distribution<double> unif(0.1, 1.0);
    NmfResult r;
    r.w.resize(n, k);
    r.h.resize(k, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) r.w(i, j) = unif(rng);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < d; ++j) r.h(i, j) = unif(rng);

    r.objective.push_back((x - r.w * r.h).squaredNorm());
    for (int it = 0; it < iterations; ++it) {
        r.h.array() *= (r.w.transpose() * x).array() /
                       ((r.w.transpose() * r.w) * r.h).array().max(eps);
        r.w.array() *= (x * r.h.transpose()).array() /
                       (r.w * (r.h * r.h.transpose())).array().max(eps);
        const double obj = (x - r.w * r.h).squaredNorm();
        if (obj > r.objective.back() * (1.0 + 1e-8) + 1e-10)
            throw std::runtime_error("nmf_factorize: objective increased at iteration " +
                                     std::to_string(it));
        r.objective.push_back(obj);
    }
    return r;
}

Eigen::MatrixXd nmf_init(const Eigen::MatrixXd& x_train, int k, std::mt19937_64& rng,
                         int iterations) {
    Eigen::MatrixXd shifted = x_train;
    for (int j = 0; j < shifted.cols(); ++j) {
        const double mn = shifted.col(j).minCoeff();
        if (mn < 0.0) shifted.col(j).array() -= mn;
    }
    auto r = nmf_factorize(shifted, k, rng, iterations);
    return rescale_to_kaiming(r.h, rng);
}

std::vector<int> wl_colors(const FeatureGraph& g, int iterations) {
    const int n = g.node_count;
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : g.edges) {
        adj[e.first].push_back(e.second);
        adj[e.second].push_back(e.first);
    }
    std::vector<int> color(n, 0);
    for (int it = 0; it < iterations; ++it) {
        std::vector<std::pair<int, std::vector<int>>> sig(n);
        for (int u = 0; u < n; ++u) {
            std::vector<int> nb;
            nb.reserve(adj[u].size());
            for (int v : adj[u]) nb.push_back(color[v]);
            std::sort(nb.begin(), nb.end());
            sig[u] = {color[u], std::move(nb)};
        }
        // canonical ids: rank of the sorted unique signature, so the result
        // does not depend on node enumeration order
        std::map<std::pair<int, std::vector<int>>, int> ids;
        for (int u = 0; u < n; ++u) ids.emplace(sig[u], 0);
        int next = 0;
        for (auto& [s, id] : ids) id = next++;
        for (int u = 0; u < n; ++u) color[u] = ids[sig[u]];
    }
    return color;
}

Eigen::MatrixXd wl_histogram_columns(const std::vector<FeatureGraph>& graphs, int k,
                                     int wl_iterations) {
    if (graphs.empty()) throw std::invalid_argument("wl_histogram_columns: no graphs");
    const int d = static_cast<int>(graphs.size());
    std::vector<std::vector<int>> colors(d);
    int gmin = 0, gmax = 0;
    for (int j = 0; j < d; ++j) {
        colors[j] = wl_colors(graphs[j], wl_iterations);
        gmin = std::min(gmin, *std::min_element(colors[j].begin(), colors[j].end()));
        gmax = std::max(gmax, *std::max_element(colors[j].begin(), colors[j].end()));
    }
    const double lo = double(gmin);
    const double width = std::max(double(gmax) - lo, 1e-12);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, d);
    for (int j = 0; j < d; ++j) {
        for (int c : colors[j]) {
            int bin = static_cast<int>(std::floor((double(c) - lo) / width * k));
            bin = std::clamp(bin, 0, k - 1);
            h(bin, j) += 1.0;
        }
        h.col(j) /= h.col(j).sum();
    }
    return h;
}

Eigen::MatrixXd wl_init(const std::vector<FeatureGraph>& graphs, int k, std::mt19937_64& rng,
                        int wl_iterations) {
    return rescale_to_kaiming(wl_histogram_columns(graphs, k, wl_iterations), rng);
}

Eigen::MatrixXd first_layer_init(InitKind kind, const Eigen::MatrixXd& x_train_normalized,
                                 const std::vector<FeatureGraph>& graphs, int k,
                                 std::uint64_t seed) {
    auto rng = make_engine(seed, 201);
    switch (kind) {
        case InitKind::Kaiming:
            return kaiming_init(k, static_cast<int>(x_train_normalized.cols()), rng);
        case InitKind::Pca:
            return pca_init(x_train_normalized, k, rng).w;
        case InitKind::Nmf:
            return nmf_init(x_train_normalized, k, rng);
        case InitKind::Wl:
            return wl_init(graphs, k, rng);
    }
    throw std::logic_error("first_layer_init: unreachable");
}

}  // namespace gcondnet
