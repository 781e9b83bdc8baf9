#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "gcondnet/layers.hpp"
#include "gcondnet/rng.hpp"

namespace gcondnet {

struct MixingSchedule {
    enum class Mode { LinearDecay, Fixed };
    Mode mode = Mode::LinearDecay;
    long n_alpha = 200;
    double fixed_alpha = 0.0;
};

/// alpha(i) = max(0, 1 - i/n_alpha) for linear decay. n_alpha = 0 is treated
/// as the limit: alpha = 0 for every step, including step 0.
inline double mixing_alpha(long step, const MixingSchedule& schedule) {
    if (schedule.mode == MixingSchedule::Mode::Fixed) return schedule.fixed_alpha;
    if (schedule.n_alpha <= 0) return 0.0;
    return std::max(0.0, 1.0 - double(step) / double(schedule.n_alpha));
}

/// alpha * W_GNN + (1 - alpha) * W_scratch, elementwise.
template <typename T>
typename Tape<T>::Mat compose_first_layer(const typename Tape<T>::Mat& w_gnn,
                                          const typename Tape<T>::Mat& w_scratch, T alpha) {
    if (w_gnn.rows() != w_scratch.rows() || w_gnn.cols() != w_scratch.cols())
        throw std::invalid_argument("compose_first_layer: shape mismatch");
    return alpha * w_gnn + (T(1) - alpha) * w_scratch;
}

template <typename T>
struct GCondNetModel {
    using Mat = typename Tape<T>::Mat;

    GcnParams<T> gnn;  // unused in MLP-only mode (input_width() == 0)
    MlpParams<T> mlp;
    Parameter<T> w_scratch;  // first hidden width x D, zero-initialized
    MixingSchedule schedule;
    std::optional<Mat> frozen_first_layer;

    bool has_gnn() const { return gnn.input_width() > 0; }

    std::vector<Parameter<T>*> parameters(bool include_gnn) {
        std::vector<Parameter<T>*> out;
        if (include_gnn && has_gnn())
            for (auto* p : gnn.parameters()) out.push_back(p);
        for (auto* p : mlp.parameters()) out.push_back(p);
        out.push_back(&w_scratch);
        return out;
    }
};

struct ModelConfig {
    std::vector<int> mlp_widths{100, 100, 10};
    std::vector<int> gcn_widths{200, 100};
    double mlp_dropout = 0.2;
    double gcn_dropout = 0.5;
    double leaky_slope = 0.01;
};

/// n_train = 0 builds an MLP-only model (no GNN parameters). The first-layer
/// weight starts as w_scratch_init when given, zero otherwise.
template <typename T>
GCondNetModel<T> make_model(int d, int classes, int n_train, const ModelConfig& cfg,
                            const MixingSchedule& schedule, std::uint64_t seed,
                            const std::optional<Eigen::MatrixXd>& w_scratch_init = std::nullopt) {
    using Mat = typename Tape<T>::Mat;
    GCondNetModel<T> model;
    model.schedule = schedule;
    auto gnn_rng = make_engine(seed, 101);
    auto mlp_rng = make_engine(seed, 102);
    if (n_train > 0) {
        if (cfg.gcn_widths.back() != cfg.mlp_widths.front())
            throw std::invalid_argument(
                "make_model: GCN embedding width must equal first MLP width");
        model.gnn = GcnParams<T>::init(n_train, cfg.gcn_widths[0], cfg.gcn_widths[1], gnn_rng);
    }
    model.gnn.dropout_p = T(cfg.gcn_dropout);
    model.mlp = MlpParams<T>::init(d, cfg.mlp_widths, classes, mlp_rng);
    model.mlp.dropout_p = T(cfg.mlp_dropout);
    model.mlp.leaky_slope = T(cfg.leaky_slope);
    if (w_scratch_init) {
        if (w_scratch_init->rows() != cfg.mlp_widths[0] || w_scratch_init->cols() != d)
            throw std::invalid_argument("make_model: w_scratch init shape mismatch");
        model.w_scratch = Parameter<T>("w_scratch", w_scratch_init->template cast<T>());
    } else {
        model.w_scratch = Parameter<T>("w_scratch", Mat::Zero(cfg.mlp_widths[0], d));
    }
    return model;
}

/// W_GNN values only: column j is the pooled GCN embedding of graph j. The
/// per-graph dropout stream is derived from (step_seed, j), so a later
/// backward pass can regenerate identical masks.
template <typename T>
typename Tape<T>::Mat assemble_w_gnn_value(GcnParams<T>& gnn,
                                           const std::vector<GraphOperator<T>>& graphs,
                                           bool train, std::uint64_t step_seed) {
    using Mat = typename Tape<T>::Mat;
    const int k = gnn.embedding_width();
    Mat w(k, static_cast<Eigen::Index>(graphs.size()));
    for (std::size_t j = 0; j < graphs.size(); ++j) {
        if (graphs[j].scaled.cols != gnn.input_width())
            throw std::invalid_argument("assemble_w_gnn: graph node count does not match GCN input width");
        Tape<T> tape;
        auto vars = watch_gcn(tape, gnn);
        auto rng = make_engine(step_seed, j);
        auto pooled = gcn_pooled(tape, vars, graphs[j], gnn.dropout_p, train, rng);
        w.col(static_cast<Eigen::Index>(j)) = tape.value(pooled).row(0).transpose();
    }
    return w;
}

/// Accumulate d(loss)/d(theta_GNN) given the adjoint of W_GNN, recomputing
/// each graph's forward pass with the dropout stream of assemble_w_gnn_value.
template <typename T>
void backward_w_gnn(GcnParams<T>& gnn, const std::vector<GraphOperator<T>>& graphs, bool train,
                    std::uint64_t step_seed, const typename Tape<T>::Mat& w_gnn_grad) {
    for (std::size_t j = 0; j < graphs.size(); ++j) {
        Tape<T> tape;
        auto vars = watch_gcn(tape, gnn);
        auto rng = make_engine(step_seed, j);
        auto pooled = gcn_pooled(tape, vars, graphs[j], gnn.dropout_p, train, rng);
        tape.backward_seeded(pooled, w_gnn_grad.col(static_cast<Eigen::Index>(j)).transpose());
    }
}

/// Single-tape W_GNN assembly (all graphs differentiable on one tape); the
/// reference route for gradient checks and equivalence tests.
template <typename T>
typename Tape<T>::Var assemble_w_gnn_taped(Tape<T>& tape, GcnParams<T>& gnn,
                                           const std::vector<GraphOperator<T>>& graphs,
                                           bool train, std::uint64_t step_seed) {
    auto vars = watch_gcn(tape, gnn);
    std::vector<typename Tape<T>::Var> cols;
    cols.reserve(graphs.size());
    for (std::size_t j = 0; j < graphs.size(); ++j) {
        auto rng = make_engine(step_seed, j);
        cols.push_back(gcn_pooled(tape, vars, graphs[j], gnn.dropout_p, train, rng));
    }
    return tape.stack_columns(cols);
}

}  // namespace gcondnet
