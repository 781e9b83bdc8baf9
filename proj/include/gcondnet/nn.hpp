#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcondnet/sparse.hpp"

namespace gcondnet {

template <typename T>
struct Parameter {
    std::string name;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> value;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> grad;

    Parameter() = default;
    Parameter(std::string n, Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> v)
        : name(std::move(n)), value(std::move(v)) {
        zero_grad();
    }
    void zero_grad() { grad = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(value.rows(), value.cols()); }
};

template <typename T>
struct RunningStats {
    Eigen::Matrix<T, 1, Eigen::Dynamic> mean;
    Eigen::Matrix<T, 1, Eigen::Dynamic> var;
    bool initialized = false;
};

/// Reverse-mode tape over dense matrices. Forward ops append backward
/// closures; backward() replays them in reverse and flushes gradients of
/// watched parameters.
template <typename T>
class Tape {
public:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    struct Var {
        int idx = -1;
        bool valid() const { return idx >= 0; }
    };

    Var constant(Mat v) { return push(std::move(v), false); }
    Var leaf(Mat v) { return push(std::move(v), true); }

    Var watch(Parameter<T>& p) {
        Var v = push(p.value, true);
        watched_.push_back({v.idx, &p});
        return v;
    }

    const Mat& value(Var v) const { return slots_[v.idx].value; }
    const Mat& grad(Var v) const { return slots_[v.idx].grad; }

    // ---- linear algebra ----

    Var matmul(Var a, Var b) {  // A (m x k) * B (k x n)
        Var out = push(value(a) * value(b), needs(a) || needs(b));
        if (needs(out)) record([this, a, b, out] {
            if (needs(a)) g(a) += g(out) * value(b).transpose();
            if (needs(b)) g(b) += value(a).transpose() * g(out);
        });
        return out;
    }

    Var matmul_bt(Var a, Var b) {  // A (m x k) * B(n x k)^T
        Var out = push(value(a) * value(b).transpose(), needs(a) || needs(b));
        if (needs(out)) record([this, a, b, out] {
            if (needs(a)) g(a) += g(out) * value(b);
            if (needs(b)) g(b) += g(out).transpose() * value(a);
        });
        return out;
    }

    Var spmm(const CsrMatrix<T>* m, Var x) {  // sparse M * X, M constant
        Var out = push(m->multiply(value(x)), needs(x));
        if (needs(out)) record([this, m, x, out] {
            g(x) += m->multiply_transposed(g(out));
        });
        return out;
    }

    Var vecmat(Row a, Var x) {  // (1 x m) * X, a constant
        Var out = push(a * value(x), needs(x));
        if (needs(out)) record([this, a = std::move(a), x, out] {
            g(x) += a.transpose() * g(out);
        });
        return out;
    }

    Var row_scale(Var x, Vec s) {  // diag(s) * X, s constant
        Mat y = value(x);
        y.array().colwise() *= s.array();
        Var out = push(std::move(y), needs(x));
        if (needs(out)) record([this, s = std::move(s), x, out] {
            g(x).array() += g(out).array().colwise() * s.array();
        });
        return out;
    }

    Var add_row(Var x, Var bias) {  // X.rowwise() + bias (1 x n)
        Var out = push(value(x).rowwise() + value(bias).row(0), needs(x) || needs(bias));
        if (needs(out)) record([this, x, bias, out] {
            if (needs(x)) g(x) += g(out);
            if (needs(bias)) g(bias) += g(out).colwise().sum();
        });
        return out;
    }

    Var scale_add(T alpha, Var a, T beta, Var b) {  // alpha*A + beta*B
        Var out = push(alpha * value(a) + beta * value(b), needs(a) || needs(b));
        if (needs(out)) record([this, alpha, beta, a, b, out] {
            if (needs(a)) g(a) += alpha * g(out);
            if (needs(b)) g(b) += beta * g(out);
        });
        return out;
    }

    // ---- nonlinearities ----

    Var relu(Var x) {
        Var out = push(value(x).cwiseMax(T(0)), needs(x));
        if (needs(out)) record([this, x, out] {
            g(x).array() += g(out).array() * (value(x).array() > T(0)).template cast<T>();
        });
        return out;
    }

    Var leaky_relu(Var x, T slope) {
        const auto& v = value(x);
        Mat y = (v.array() > T(0)).select(v, slope * v);
        Var out = push(std::move(y), needs(x));
        if (needs(out)) record([this, x, out, slope] {
            Mat m = (value(x).array() > T(0)).select(Mat::Constant(value(x).rows(), value(x).cols(), T(1)),
                                                     Mat::Constant(value(x).rows(), value(x).cols(), slope));
            g(x).array() += g(out).array() * m.array();
        });
        return out;
    }

    /// Inverted dropout: surviving entries are scaled by 1/(1-p) so the
    /// eval-mode forward is the identity.
    Var dropout(Var x, T p, std::mt19937_64& rng, bool train) {
        if (!train || p <= T(0)) return x;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Mat mask(value(x).rows(), value(x).cols());
        const T scale = T(1) / (T(1) - p);
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                mask(i, j) = unif(rng) < double(p) ? T(0) : scale;
        Var out = push(value(x).cwiseProduct(mask), needs(x));
        if (needs(out)) record([this, x, out, mask = std::move(mask)] {
            g(x) += g(out).cwiseProduct(mask);
        });
        return out;
    }

    /// Batch normalization over rows (features are columns). Train mode uses
    /// population batch statistics and updates the running stats; eval mode
    /// uses the running stats.
    Var batch_norm(Var x, Var gamma, Var beta, RunningStats<T>* stats, bool train, T momentum,
                   T eps) {
        const auto& v = value(x);
        const Eigen::Index n = v.rows();
        if (train && n < 2)
            throw std::invalid_argument(
                "batch_norm: train mode needs batch size >= 2 (use eval mode for single samples)");

        Row mu, var;
        if (train) {
            mu = v.colwise().mean();
            var = (v.rowwise() - mu).array().square().colwise().mean();
            if (!stats->initialized) {
                stats->mean = mu;
                stats->var = var;
                stats->initialized = true;
            } else {
                stats->mean = (T(1) - momentum) * stats->mean + momentum * mu;
                stats->var = (T(1) - momentum) * stats->var + momentum * var;
            }
        } else {
            if (!stats->initialized) {
                mu = Row::Zero(v.cols());
                var = Row::Ones(v.cols());
            } else {
                mu = stats->mean;
                var = stats->var;
            }
        }
        Row istd = (var.array() + eps).rsqrt();
        Mat xhat = (v.rowwise() - mu).array().rowwise() * istd.array();
        Mat y = (xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() +
                value(beta).row(0).array();
        Var out = push(std::move(y), needs(x) || needs(gamma) || needs(beta));
        if (needs(out)) record([this, x, gamma, beta, out, train, xhat = std::move(xhat),
                                istd = std::move(istd)] {
            const Mat& go = g(out);
            const Eigen::Index n = go.rows();
            if (needs(gamma)) g(gamma) += (go.array() * xhat.array()).colwise().sum().matrix();
            if (needs(beta)) g(beta) += go.colwise().sum();
            if (needs(x)) {
                Mat dxhat = go.array().rowwise() * value(gamma).row(0).array();
                if (train) {
                    Row sum_dxhat = dxhat.colwise().sum();
                    Row sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum();
                    Mat dx = (T(n) * dxhat.array() -
                              (Mat::Ones(n, 1) * sum_dxhat).array() -
                              xhat.array() * (Mat::Ones(n, 1) * sum_dxhat_xhat).array())
                                 .rowwise() *
                             (istd.array() / T(n));
                    g(x) += dx.matrix();
                } else {
                    g(x).array() += dxhat.array().rowwise() * istd.array();
                }
            }
        });
        return out;
    }

    // ---- reductions / reshaping ----

    Var mean_rows(Var x) {  // N x K -> 1 x K
        const Eigen::Index n = value(x).rows();
        if (n == 0) throw std::invalid_argument("mean_rows: empty input");
        Var out = push(value(x).colwise().mean(), needs(x));
        if (needs(out)) record([this, x, out, n] {
            g(x) += (Mat::Ones(n, 1) * g(out)) / T(n);
        });
        return out;
    }

    Var stack_columns(const std::vector<Var>& cols) {  // D vars of 1 x K -> K x D
        const Eigen::Index k = value(cols[0]).cols();
        Mat y(k, static_cast<Eigen::Index>(cols.size()));
        bool any = false;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            y.col(j) = value(cols[j]).row(0).transpose();
            any = any || needs(cols[j]);
        }
        Var out = push(std::move(y), any);
        if (needs(out)) record([this, cols, out] {
            for (std::size_t j = 0; j < cols.size(); ++j)
                if (needs(cols[j])) g(cols[j]) += g(out).col(j).transpose();
        });
        return out;
    }

    Var softmax_rows(Var x) {
        const auto& v = value(x);
        Mat y(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            Row r = v.row(i);
            r.array() -= r.maxCoeff();
            Row e = r.array().exp();
            y.row(i) = e / e.sum();
        }
        Var out = push(std::move(y), needs(x));
        if (needs(out)) record([this, x, out] {
            const Mat& y = value(out);
            const Mat& go = g(out);
            for (Eigen::Index i = 0; i < y.rows(); ++i) {
                const T dot = (go.row(i).array() * y.row(i).array()).sum();
                g(x).row(i).array() += y.row(i).array() * (go.row(i).array() - dot);
            }
        });
        return out;
    }

    /// Weighted cross-entropy on probabilities:
    ///   mean_i w[y_i] * (-log max(p[i][y_i], 1e-12))
    Var wce_loss(Var probs, const std::vector<int>& labels, const std::vector<T>& weights) {
        const auto& p = value(probs);
        if (static_cast<Eigen::Index>(labels.size()) != p.rows())
            throw std::invalid_argument("wce_loss: label count does not match batch size");
        const T clamp = T(1e-12);
        T loss = T(0);
        for (std::size_t i = 0; i < labels.size(); ++i)
            loss += weights[labels[i]] * -std::log(std::max(p(static_cast<Eigen::Index>(i), labels[i]), clamp));
        loss /= T(labels.size());
        Var out = push(Mat::Constant(1, 1, loss), needs(probs));
        if (needs(out)) record([this, probs, out, labels, weights, clamp] {
            const auto& p = value(probs);
            const T go = g(out)(0, 0);
            const T b = T(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) {
                const Eigen::Index r = static_cast<Eigen::Index>(i);
                const T pv = p(r, labels[i]);
                if (pv > clamp) g(probs)(r, labels[i]) += go * -weights[labels[i]] / (b * pv);
            }
        });
        return out;
    }

    // ---- backward ----

    void backward(Var loss) {
        if (value(loss).size() != 1)
            throw std::invalid_argument("backward: loss must be a scalar");
        backward_seeded(loss, Mat::Constant(1, 1, T(1)));
    }

    /// Backward from an arbitrary variable with an explicit output adjoint.
    void backward_seeded(Var v, const Mat& seed) {
        if (!v.valid() || v.idx >= static_cast<int>(slots_.size()))
            throw std::invalid_argument("backward: variable not on this tape");
        if (consumed_) throw std::logic_error("backward: tape already consumed");
        consumed_ = true;
        g(v) += seed;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
        for (auto& [idx, p] : watched_) p->grad += slots_[idx].grad;
    }

private:
    struct Slot {
        Mat value;
        Mat grad;
        bool requires_grad = false;
    };

    Var push(Mat v, bool requires_grad) {
        Slot s;
        s.requires_grad = requires_grad;
        if (requires_grad) s.grad = Mat::Zero(v.rows(), v.cols());
        s.value = std::move(v);
        slots_.push_back(std::move(s));
        return Var{static_cast<int>(slots_.size()) - 1};
    }

    bool needs(Var v) const { return slots_[v.idx].requires_grad; }
    Mat& g(Var v) { return slots_[v.idx].grad; }

    template <typename F>
    void record(F&& f) {
        ops_.emplace_back(std::forward<F>(f));
    }

    std::vector<Slot> slots_;
    std::vector<std::function<void()>> ops_;
    std::vector<std::pair<int, Parameter<T>*>> watched_;
    bool consumed_ = false;
};

}  // namespace gcondnet
