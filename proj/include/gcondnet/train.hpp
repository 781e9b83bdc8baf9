#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcondnet/model.hpp"
#include "gcondnet/optim.hpp"

namespace gcondnet {

struct TrainConfig {
    long max_steps = 10000;
    int batch_size = 8;
    long patience = 200;
    double lr = 1e-4;
    double weight_decay = 0.0;
    std::uint64_t seed = 42;
};

struct HistoryRow {
    long step;
    double train_loss;
    double val_loss;
    double alpha;
};

struct History {
    std::vector<HistoryRow> rows;

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        out.precision(10);
        out << "step,train_loss,val_loss,alpha\n";
        for (const auto& r : rows)
            out << r.step << ',' << r.train_loss << ',' << r.val_loss << ',' << r.alpha << '\n';
    }
};

/// Inference-only artifact: the MLP plus the frozen first layer. No graph or
/// GNN state survives here.
template <typename T>
struct TrainedModel {
    using Mat = typename Tape<T>::Mat;

    MlpParams<T> mlp;
    Mat first_layer;

    Mat predict(const Eigen::Ref<const Mat>& x) {
        Tape<T> tape;
        std::mt19937_64 unused(0);
        auto vars = watch_mlp(tape, mlp);
        auto first = tape.constant(first_layer);
        auto probs = mlp_forward(tape, vars, mlp, tape.constant(x), first, false, unused);
        return tape.value(probs);
    }

    std::vector<int> predict_labels(const Eigen::Ref<const Mat>& x) {
        Mat p = predict(x);
        std::vector<int> out(p.rows());
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            Eigen::Index arg;
            p.row(i).maxCoeff(&arg);
            out[i] = static_cast<int>(arg);
        }
        return out;
    }
};

template <typename T>
struct TrainerData {
    using Mat = typename Tape<T>::Mat;

    Mat x_train;
    std::vector<int> y_train;
    Mat x_val;
    std::vector<int> y_val;
    std::vector<GraphOperator<T>> graphs;  // empty in MLP-only mode
    std::vector<T> class_weights;
};

/// The training loop: per step, assemble W_GNN while alpha > 0, compose the
/// first layer, take one weighted-cross-entropy AdamW step, evaluate the
/// validation loss, and early-stop on patience with best-checkpoint restore.
/// Once alpha reaches 0 all GNN work is skipped; the GNN gradient is exactly
/// zero there, so the parameter trajectory is unchanged.
template <typename T>
class Trainer {
public:
    using Mat = typename Tape<T>::Mat;

    Trainer(TrainerData<T> data, GCondNetModel<T> model, TrainConfig cfg)
        : data_(std::move(data)),
          model_(std::move(model)),
          cfg_(cfg),
          batch_rng_(make_engine(cfg.seed, 1)),
          mlp_drop_rng_(make_engine(cfg.seed, 2)),
          gnn_seed_rng_(make_engine(cfg.seed, 3)) {
        if (data_.y_val.empty()) throw std::invalid_argument("Trainer: empty validation split");
        opt_.set_hyper({T(cfg.lr), T(0.9), T(0.999), T(1e-8), T(cfg.weight_decay)});
        perm_.resize(data_.y_train.size());
        std::iota(perm_.begin(), perm_.end(), 0);
        std::shuffle(perm_.begin(), perm_.end(), batch_rng_);
    }

    /// One training step. Returns false when training should stop.
    bool step_once(bool force_gnn_compute = false) {
        if (step_ >= cfg_.max_steps) return false;
        const double alpha = mixing_alpha(step_, model_.schedule);
        const bool use_gnn = model_.has_gnn() && (alpha > 0.0 || force_gnn_compute);

        auto batch = next_batch();
        Mat xb(batch.size(), data_.x_train.cols());
        std::vector<int> yb(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            xb.row(static_cast<Eigen::Index>(i)) = data_.x_train.row(batch[i]);
            yb[i] = data_.y_train[batch[i]];
        }

        for (auto* p : model_.parameters(use_gnn)) p->zero_grad();

        Mat w_gnn;
        std::uint64_t step_seed = 0;
        if (use_gnn) {
            step_seed = gnn_seed_rng_();
            w_gnn = assemble_w_gnn_value(model_.gnn, data_.graphs, true, step_seed);
        }

        Tape<T> tape;
        typename Tape<T>::Var first, wg_var;
        if (use_gnn) {
            wg_var = tape.leaf(w_gnn);
            auto ws = tape.watch(model_.w_scratch);
            first = tape.scale_add(T(alpha), wg_var, T(1) - T(alpha), ws);
        } else {
            first = tape.watch(model_.w_scratch);
        }
        auto mvars = watch_mlp(tape, model_.mlp);
        auto probs = mlp_forward(tape, mvars, model_.mlp, tape.constant(xb), first, true,
                                 mlp_drop_rng_);
        auto loss = tape.wce_loss(probs, yb, data_.class_weights);
        const double train_loss = double(tape.value(loss)(0, 0));
        if (!std::isfinite(train_loss))
            throw std::runtime_error("Trainer: non-finite training loss at step " +
                                     std::to_string(step_));
        tape.backward(loss);
        if (use_gnn)
            backward_w_gnn(model_.gnn, data_.graphs, true, step_seed, tape.grad(wg_var));

        // alpha == 0 freezes the GNN entirely: no gradient, no optimizer entry
        opt_.step(model_.parameters(model_.has_gnn() && alpha > 0.0));

        const double val_loss = eval_validation();
        history_.rows.push_back({step_, train_loss, val_loss, alpha});

        if (val_loss < best_val_) {
            best_val_ = val_loss;
            best_step_ = step_;
            best_model_ = model_;
            best_first_layer_ = current_first_layer_eval();
        }
        ++step_;
        if (step_ - best_step_ > cfg_.patience) return false;
        return step_ < cfg_.max_steps;
    }

    void run() {
        while (step_once()) {
        }
        restore_best();
    }

    /// Weighted cross-entropy on the validation split with the current
    /// parameters, eval mode throughout (no dropout anywhere).
    double eval_validation() {
        Mat first = current_first_layer_eval();
        Tape<T> tape;
        std::mt19937_64 unused(0);
        auto mvars = watch_mlp(tape, model_.mlp);
        auto probs = mlp_forward(tape, mvars, model_.mlp, tape.constant(data_.x_val),
                                 tape.constant(first), false, unused);
        return weighted_cross_entropy(tape.value(probs), data_.y_val, data_.class_weights);
    }

    /// Eval-mode composed first layer at the current step's alpha.
    Mat current_first_layer_eval() {
        const double alpha = mixing_alpha(step_, model_.schedule);
        if (!model_.has_gnn() || alpha <= 0.0) return model_.w_scratch.value;
        Mat w_gnn = assemble_w_gnn_value(model_.gnn, data_.graphs, false, 0);
        return compose_first_layer<T>(w_gnn, model_.w_scratch.value, T(alpha));
    }

    void restore_best() {
        if (best_step_ < 0) return;
        model_ = best_model_;
        model_.frozen_first_layer = best_first_layer_;
    }

    TrainedModel<T> finalize() const {
        if (!model_.frozen_first_layer)
            throw std::logic_error("finalize: model not trained/finalized (no frozen first layer)");
        return TrainedModel<T>{model_.mlp, *model_.frozen_first_layer};
    }

    GCondNetModel<T>& model() { return model_; }
    AdamW<T>& optimizer() { return opt_; }
    const History& history() const { return history_; }
    long current_step() const { return step_; }
    long best_step() const { return best_step_; }
    double best_val_loss() const { return best_val_; }

    std::mt19937_64& batch_rng() { return batch_rng_; }
    std::mt19937_64& mlp_drop_rng() { return mlp_drop_rng_; }
    std::mt19937_64& gnn_seed_rng() { return gnn_seed_rng_; }
    std::vector<int>& batch_perm() { return perm_; }
    std::size_t& batch_pos() { return pos_; }

private:
    std::vector<int> next_batch() {
        const std::size_t n = perm_.size();
        std::size_t b = std::min<std::size_t>(cfg_.batch_size, n);
        // drop short epoch tails so batch statistics stay well defined
        if (n - pos_ < b) {
            std::shuffle(perm_.begin(), perm_.end(), batch_rng_);
            pos_ = 0;
        }
        std::vector<int> batch(perm_.begin() + pos_, perm_.begin() + pos_ + b);
        pos_ += b;
        return batch;
    }

    TrainerData<T> data_;
    GCondNetModel<T> model_;
    TrainConfig cfg_;
    AdamW<T> opt_;
    History history_;

    std::mt19937_64 batch_rng_, mlp_drop_rng_, gnn_seed_rng_;
    std::vector<int> perm_;
    std::size_t pos_ = 0;

    long step_ = 0;
    long best_step_ = -1;
    double best_val_ = std::numeric_limits<double>::infinity();
    GCondNetModel<T> best_model_;
    Mat best_first_layer_;
};

}  // namespace gcondnet
