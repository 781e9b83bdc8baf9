#pragma once

#include <random>
#include <string>
#include <vector>

#include "gcondnet/graphs.hpp"
#include "gcondnet/nn.hpp"

namespace gcondnet {

/// Kaiming fan-in normal draw: i.i.d. N(0, 2/fan_in).
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> kaiming_normal(int rows, int cols, int fan_in,
                                                                std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / double(fan_in)));
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = static_cast<T>(normal(rng));
    return m;
}

/// Two-layer GCN shared across all feature graphs. Weights are stored
/// in-by-out (layer input X is N x in, output is X * W + b).
template <typename T>
struct GcnParams {
    using Mat = typename Tape<T>::Mat;

    Parameter<T> w1, b1, w2, b2;
    T dropout_p = T(0.5);

    static GcnParams init(int n_in, int h1, int h2, std::mt19937_64& rng) {
        GcnParams p;
        p.w1 = Parameter<T>("gcn.w1", kaiming_normal<T>(n_in, h1, n_in, rng));
        p.b1 = Parameter<T>("gcn.b1", Mat::Zero(1, h1));
        p.w2 = Parameter<T>("gcn.w2", kaiming_normal<T>(h1, h2, h1, rng));
        p.b2 = Parameter<T>("gcn.b2", Mat::Zero(1, h2));
        return p;
    }

    int input_width() const { return static_cast<int>(w1.value.rows()); }
    int embedding_width() const { return static_cast<int>(w2.value.cols()); }

    std::vector<Parameter<T>*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

/// MLP predictor. The first hidden layer's weight matrix is composed
/// externally (hidden[0].w stays empty); everything else is owned here.
/// All weights are stored out-by-in and applied as x * W^T + b.
template <typename T>
struct MlpParams {
    using Mat = typename Tape<T>::Mat;

    struct Layer {
        Parameter<T> w;  // out x in; empty for layer 0
        Parameter<T> b;
        Parameter<T> gamma, beta;
        RunningStats<T> running;
    };

    std::vector<Layer> hidden;
    Parameter<T> out_w, out_b;
    T dropout_p = T(0.2);
    T leaky_slope = T(0.01);
    T bn_momentum = T(0.1);
    T bn_eps = T(1e-5);

    static MlpParams init(int d_in, const std::vector<int>& widths, int classes,
                          std::mt19937_64& rng) {
        MlpParams p;
        int prev = d_in;
        for (std::size_t l = 0; l < widths.size(); ++l) {
            Layer layer;
            const int w = widths[l];
            const std::string tag = "mlp.l" + std::to_string(l);
            if (l > 0) layer.w = Parameter<T>(tag + ".w", kaiming_normal<T>(w, prev, prev, rng));
            layer.b = Parameter<T>(tag + ".b", Mat::Zero(1, w));
            layer.gamma = Parameter<T>(tag + ".gamma", Mat::Ones(1, w));
            layer.beta = Parameter<T>(tag + ".beta", Mat::Zero(1, w));
            p.hidden.push_back(std::move(layer));
            prev = w;
        }
        p.out_w = Parameter<T>("mlp.out.w", kaiming_normal<T>(classes, prev, prev, rng));
        p.out_b = Parameter<T>("mlp.out.b", Mat::Zero(1, classes));
        return p;
    }

    int first_width() const { return static_cast<int>(hidden[0].b.value.cols()); }
    int class_count() const { return static_cast<int>(out_w.value.rows()); }

    template <typename U>
    MlpParams<U> cast() const {
        MlpParams<U> out;
        auto cast_param = [](const Parameter<T>& p) {
            return Parameter<U>(p.name, p.value.template cast<U>());
        };
        for (const auto& layer : hidden) {
            typename MlpParams<U>::Layer l;
            l.w = cast_param(layer.w);
            l.b = cast_param(layer.b);
            l.gamma = cast_param(layer.gamma);
            l.beta = cast_param(layer.beta);
            l.running.initialized = layer.running.initialized;
            if (layer.running.initialized) {
                l.running.mean = layer.running.mean.template cast<U>();
                l.running.var = layer.running.var.template cast<U>();
            }
            out.hidden.push_back(std::move(l));
        }
        out.out_w = cast_param(out_w);
        out.out_b = cast_param(out_b);
        out.dropout_p = U(dropout_p);
        out.leaky_slope = U(leaky_slope);
        out.bn_momentum = U(bn_momentum);
        out.bn_eps = U(bn_eps);
        return out;
    }

    /// Owned parameters; the composed first-layer weight is not among them.
    std::vector<Parameter<T>*> parameters() {
        std::vector<Parameter<T>*> out;
        for (std::size_t l = 0; l < hidden.size(); ++l) {
            if (l > 0) out.push_back(&hidden[l].w);
            out.push_back(&hidden[l].b);
            out.push_back(&hidden[l].gamma);
            out.push_back(&hidden[l].beta);
        }
        out.push_back(&out_w);
        out.push_back(&out_b);
        return out;
    }
};

/// Fixed per-graph operators precomputed once per training run:
/// M = A_hat * diag(values) and a = (1/N) * A_hat * 1. With mean pooling the
/// pooled GCN output is  (a^T H1) W2 + b2,  so the N x h1 by h1 x h2 product
/// never has to be formed per node.
template <typename T>
struct GraphOperator {
    CsrMatrix<T> adj;  // A_hat
    CsrMatrix<T> scaled;  // A_hat * diag(values)
    Eigen::Matrix<T, 1, Eigen::Dynamic> pool;  // (1/N) 1^T A_hat
    int node_count = 0;

    static GraphOperator from_graph(const FeatureGraph& g) {
        GraphOperator op;
        auto adj = normalize_adjacency(g);
        op.adj = adj.template cast<T>();
        op.scaled = adj.scale_columns(g.values).template cast<T>();
        op.pool = (adj.row_sums() / double(g.node_count)).transpose().template cast<T>();
        op.node_count = g.node_count;
        return op;
    }
};

template <typename T>
struct GcnVars {
    typename Tape<T>::Var w1, b1, w2, b2;
};

template <typename T>
GcnVars<T> watch_gcn(Tape<T>& tape, GcnParams<T>& params) {
    return {tape.watch(params.w1), tape.watch(params.b1), tape.watch(params.w2),
            tape.watch(params.b2)};
}

/// Full GCN forward returning per-node embeddings (N x h2):
///   H1 = dropout(ReLU(A_hat diag(v) W1 + b1)); out = A_hat H1 W2 + b2.
template <typename T>
typename Tape<T>::Var gcn_forward(Tape<T>& tape, const GcnVars<T>& v, const CsrMatrix<T>* adj,
                                  const Eigen::Matrix<T, Eigen::Dynamic, 1>& values,
                                  T dropout_p, bool train, std::mt19937_64& rng) {
    auto xw = tape.row_scale(v.w1, values);  // diag(v) * W1
    auto h1 = tape.dropout(tape.relu(tape.add_row(tape.spmm(adj, xw), v.b1)), dropout_p, rng, train);
    return tape.add_row(tape.matmul(tape.spmm(adj, h1), v.w2), v.b2);
}

template <typename T>
typename Tape<T>::Var global_mean_pool(Tape<T>& tape, typename Tape<T>::Var node_embeddings) {
    return tape.mean_rows(node_embeddings);
}

/// Pooled GCN forward (1 x h2), algebraically equal to
/// global_mean_pool(gcn_forward(...)) because mean pooling commutes with the
/// second linear layer.
template <typename T>
typename Tape<T>::Var gcn_pooled(Tape<T>& tape, const GcnVars<T>& v, const GraphOperator<T>& op,
                                 T dropout_p, bool train, std::mt19937_64& rng) {
    auto h1 = tape.dropout(tape.relu(tape.add_row(tape.spmm(&op.scaled, v.w1), v.b1)), dropout_p,
                           rng, train);
    auto r = tape.vecmat(op.pool, h1);  // (1/N) 1^T A_hat H1
    return tape.add_row(tape.matmul(r, v.w2), v.b2);
}

template <typename T>
struct MlpVars {
    struct Layer {
        typename Tape<T>::Var w, b, gamma, beta;
    };
    std::vector<Layer> hidden;
    typename Tape<T>::Var out_w, out_b;
};

template <typename T>
MlpVars<T> watch_mlp(Tape<T>& tape, MlpParams<T>& params) {
    MlpVars<T> v;
    for (std::size_t l = 0; l < params.hidden.size(); ++l) {
        typename MlpVars<T>::Layer lv;
        if (l > 0) lv.w = tape.watch(params.hidden[l].w);
        lv.b = tape.watch(params.hidden[l].b);
        lv.gamma = tape.watch(params.hidden[l].gamma);
        lv.beta = tape.watch(params.hidden[l].beta);
        v.hidden.push_back(lv);
    }
    v.out_w = tape.watch(params.out_w);
    v.out_b = tape.watch(params.out_b);
    return v;
}

/// MLP forward on a batch (B x D) with the externally composed first layer
/// (out x in). Per hidden layer: linear -> LeakyReLU -> batch norm -> dropout;
/// output layer: linear -> softmax. Returns row-stochastic probabilities.
template <typename T>
typename Tape<T>::Var mlp_forward(Tape<T>& tape, const MlpVars<T>& v, MlpParams<T>& params,
                                  typename Tape<T>::Var x, typename Tape<T>::Var first_layer,
                                  bool train, std::mt19937_64& rng) {
    auto h = x;
    for (std::size_t l = 0; l < params.hidden.size(); ++l) {
        auto w = l == 0 ? first_layer : v.hidden[l].w;
        h = tape.add_row(tape.matmul_bt(h, w), v.hidden[l].b);
        h = tape.leaky_relu(h, params.leaky_slope);
        h = tape.batch_norm(h, v.hidden[l].gamma, v.hidden[l].beta, &params.hidden[l].running,
                            train, params.bn_momentum, params.bn_eps);
        h = tape.dropout(h, params.dropout_p, rng, train);
    }
    auto logits = tape.add_row(tape.matmul_bt(h, v.out_w), v.out_b);
    return tape.softmax_rows(logits);
}

/// Tape-free weighted cross-entropy of probabilities, for validation and
/// metric computation.
template <typename T>
double weighted_cross_entropy(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& probs,
                              const std::vector<int>& labels, const std::vector<T>& weights) {
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        loss += double(weights[labels[i]]) *
                -std::log(std::max(double(probs(static_cast<Eigen::Index>(i), labels[i])), 1e-12));
    return loss / double(labels.size());
}

}  // namespace gcondnet
