#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "gcondnet/dataio.hpp"
#include "gcondnet/graphs.hpp"
#include "gcondnet/model.hpp"
#include "gcondnet/rng.hpp"
#include "gcondnet/train.hpp"

namespace testutil {

using Mat = Eigen::MatrixXd;

inline Mat random_mat(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

/// Central finite differences of f() with respect to the entries of m,
/// mutating m in place around each evaluation.
template <typename F>
Mat fd_grad(Mat& m, F f, double h = 1e-5) {
    Mat g(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double orig = m(i, j);
            m(i, j) = orig + h;
            const double fp = f();
            m(i, j) = orig - h;
            const double fm = f();
            m(i, j) = orig;
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    return g;
}

/// max_ij |a - b| / max(|a| + |b|, floor); floor absorbs FD noise on
/// near-zero gradients.
inline double max_rel_err(const Mat& a, const Mat& b, double floor_ = 1e-4) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double denom = std::max(std::abs(a(i, j)) + std::abs(b(i, j)), floor_);
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
        }
    return worst;
}

/// Dense eval-mode pooled GCN oracle:
///   H1 = ReLU(A_hat diag(v) W1 + b1); out = mean_rows(A_hat H1 W2 + b2).
inline Eigen::RowVectorXd dense_gcn_pooled(const Mat& a_hat, const Eigen::VectorXd& v,
                                           const gcondnet::GcnParams<double>& p) {
    Mat x = v.asDiagonal();
    Mat h1 = (a_hat * x * p.w1.value).rowwise() + p.b1.value.row(0);
    h1 = h1.cwiseMax(0.0);
    Mat out = (a_hat * h1 * p.w2.value).rowwise() + p.b2.value.row(0);
    return out.colwise().mean();
}

/// A tiny but complete GCondNet instance for gradient checks: n samples,
/// d features, KNN graphs, small widths, fixed alpha so both the GNN and
/// W_scratch paths carry gradient.
struct GradcheckInstance {
    gcondnet::GCondNetModel<double> model;
    std::vector<gcondnet::GraphOperator<double>> ops;
    Mat x;
    std::vector<int> y;
    std::vector<double> weights;
    double alpha = 0.6;
    std::uint64_t step_seed = 0;
    std::uint64_t mlp_seed = 0;

    static GradcheckInstance make(std::uint64_t seed, int n = 12, int d = 6) {
        using namespace gcondnet;
        GradcheckInstance inst;
        auto rng = make_engine(seed, 900);
        inst.x = random_mat(n, d, rng);
        inst.y.resize(n);
        for (int i = 0; i < n; ++i) inst.y[i] = i % 2;
        auto w = class_weights(inst.y, 2);
        inst.weights.assign(w.begin(), w.end());

        GraphConfig gc;
        gc.kind = GraphKind::Knn;
        gc.k = 2;
        auto graphs = build_feature_graphs(inst.x, gc, seed);
        for (const auto& g : graphs) inst.ops.push_back(GraphOperator<double>::from_graph(g));

        ModelConfig mc;
        mc.mlp_widths = {5, 4, 3};
        mc.gcn_widths = {9, 5};
        MixingSchedule sched;
        sched.mode = MixingSchedule::Mode::Fixed;
        sched.fixed_alpha = inst.alpha;
        inst.model = make_model<double>(d, 2, n, mc, sched, seed);
        // nonzero W_scratch so its path is exercised beyond the zero init
        auto srng = make_engine(seed, 901);
        inst.model.w_scratch.value = random_mat(mc.mlp_widths[0], d, srng, 0.3);
        // nonzero biases keep activation kinks away from the evaluation
        // point (a fully dropped-out row otherwise lands a pre-activation
        // exactly on a zero bias, where finite differences straddle the kink)
        auto brng = make_engine(seed, 904);
        auto jitter = [&brng](Parameter<double>& p) {
            p.value = random_mat(static_cast<int>(p.value.rows()),
                                 static_cast<int>(p.value.cols()), brng, 0.2);
        };
        jitter(inst.model.gnn.b1);
        jitter(inst.model.gnn.b2);
        for (auto& layer : inst.model.mlp.hidden) {
            jitter(layer.b);
            jitter(layer.beta);
        }
        jitter(inst.model.mlp.out_b);

        inst.step_seed = mix_seed(seed, 902);
        inst.mlp_seed = mix_seed(seed, 903);
        return inst;
    }

    /// Deterministic train-mode loss; dropout streams are re-derived from the
    /// stored seeds on every call so finite differences see a fixed network.
    double loss() {
        using namespace gcondnet;
        Mat w_gnn = assemble_w_gnn_value(model.gnn, ops, true, step_seed);
        Mat first = compose_first_layer<double>(w_gnn, model.w_scratch.value, alpha);
        Tape<double> tape;
        auto mv = watch_mlp(tape, model.mlp);
        auto drop = make_engine(mlp_seed, 0);
        auto probs = mlp_forward(tape, mv, model.mlp, tape.constant(x), tape.constant(first),
                                 true, drop);
        auto l = tape.wce_loss(probs, y, weights);
        return tape.value(l)(0, 0);
    }

    /// Analytic gradients via the production route (two-phase checkpointed
    /// GNN backward), accumulated into every parameter's grad buffer.
    void analytic_gradients() {
        using namespace gcondnet;
        for (auto* p : model.parameters(true)) p->zero_grad();
        Mat w_gnn = assemble_w_gnn_value(model.gnn, ops, true, step_seed);
        Tape<double> tape;
        auto wg = tape.leaf(w_gnn);
        auto ws = tape.watch(model.w_scratch);
        auto first = tape.scale_add(alpha, wg, 1.0 - alpha, ws);
        auto mv = watch_mlp(tape, model.mlp);
        auto drop = make_engine(mlp_seed, 0);
        auto probs = mlp_forward(tape, mv, model.mlp, tape.constant(x), first, true, drop);
        auto l = tape.wce_loss(probs, y, weights);
        tape.backward(l);
        backward_w_gnn(model.gnn, ops, true, step_seed, tape.grad(wg));
    }

    /// Worst relative FD error over every parameter of the model.
    double max_gradcheck_error(double h = 1e-5) {
        analytic_gradients();
        double worst = 0.0;
        for (auto* p : model.parameters(true)) {
            Mat analytic = p->grad;
            Mat fd = fd_grad(p->value, [this] { return loss(); }, h);
            worst = std::max(worst, max_rel_err(analytic, fd));
        }
        return worst;
    }
};

/// Post-decay equivalence harness (shared by the unit test and the
/// acceptance suite): train a GCondNet to the step where alpha hits 0,
/// fork a GNN-free clone, and report whether the next `extra_steps` keep
/// the two parameter trajectories bit-identical at 64-bit precision.
inline bool post_decay_equivalent(const gcondnet::TabularDataset& data, long n_alpha,
                                  long extra_steps, std::uint64_t seed) {
    using namespace gcondnet;
    auto plan = stratified_splits(data.labels, 5, 1, 0.15, seed);
    const auto& split = plan.splits[0];

    Mat x_core(split.train.size(), data.matrix.cols());
    std::vector<int> y_core(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        x_core.row(static_cast<Eigen::Index>(i)) = data.matrix.row(split.train[i]);
        y_core[i] = data.labels[split.train[i]];
    }
    auto norm = zscore_fit(x_core);
    Mat x_train = zscore_apply(norm, x_core);

    TrainerData<double> td;
    td.x_train = x_train;
    td.y_train = y_core;
    td.x_val.resize(split.val.size(), data.matrix.cols());
    td.y_val.resize(split.val.size());
    for (std::size_t i = 0; i < split.val.size(); ++i) {
        td.x_val.row(static_cast<Eigen::Index>(i)) =
            zscore_apply(norm, data.matrix.row(split.val[i]));
        td.y_val[i] = data.labels[split.val[i]];
    }
    auto w = class_weights(y_core, data.class_count);
    td.class_weights.assign(w.begin(), w.end());

    GraphConfig gc;
    gc.kind = GraphKind::Knn;
    gc.k = 5;
    auto graphs = build_feature_graphs(x_train, gc, seed);
    for (const auto& g : graphs) td.graphs.push_back(GraphOperator<double>::from_graph(g));

    ModelConfig mc;
    mc.mlp_widths = {16, 16, 8};
    mc.gcn_widths = {24, 16};
    MixingSchedule sched;
    sched.n_alpha = n_alpha;
    auto model = make_model<double>(data.num_features(), data.class_count,
                                    static_cast<int>(split.train.size()), mc, sched, seed);

    TrainConfig tc;
    tc.max_steps = n_alpha + extra_steps;
    tc.patience = tc.max_steps;  // no early stop: compare full trajectories
    tc.seed = seed;
    Trainer<double> a(std::move(td), std::move(model), tc);

    while (a.current_step() < n_alpha)
        if (!a.step_once()) return false;

    // fork: same optimizer state and RNG streams, GNN surgically removed
    Trainer<double> b = a;
    b.model().gnn = GcnParams<double>();  // input_width() == 0 -> has_gnn() false
    b.model().frozen_first_layer = b.model().w_scratch.value;

    for (long s = 0; s < extra_steps; ++s) {
        const bool ra = a.step_once();
        const bool rb = b.step_once();
        if (ra != rb) return false;
        auto pa = a.model().parameters(false);
        auto pb = b.model().parameters(false);
        for (std::size_t i = 0; i < pa.size(); ++i)
            if ((pa[i]->value.array() != pb[i]->value.array()).any()) return false;
    }
    return true;
}

}  // namespace testutil
