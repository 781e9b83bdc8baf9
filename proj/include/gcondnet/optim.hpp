#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcondnet/nn.hpp"

namespace gcondnet {

/// AdamW with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// Moment state is kept per parameter (by name) with an individual step
/// counter, so parameters excluded from some steps keep correct bias
/// correction.
template <typename T>
class AdamW {
public:
    using Mat = typename Tape<T>::Mat;

    struct Hyper {
        T lr = T(1e-4);
        T beta1 = T(0.9);
        T beta2 = T(0.999);
        T eps = T(1e-8);
        T weight_decay = T(0);
    };

    struct State {
        Mat m, v;
        long step = 0;
    };

    AdamW() = default;
    explicit AdamW(Hyper hyper) : hyper_(hyper) {}

    const Hyper& hyper() const { return hyper_; }
    void set_hyper(Hyper h) { hyper_ = h; }

    void step(const std::vector<Parameter<T>*>& params) {
        for (Parameter<T>* p : params) {
            if (!p->grad.allFinite())
                throw std::runtime_error("AdamW: non-finite gradient for parameter '" + p->name + "'");
            State& s = states_[p->name];
            if (s.m.size() == 0) {
                s.m = Mat::Zero(p->value.rows(), p->value.cols());
                s.v = Mat::Zero(p->value.rows(), p->value.cols());
            }
            s.step += 1;
            s.m = hyper_.beta1 * s.m + (T(1) - hyper_.beta1) * p->grad;
            s.v = hyper_.beta2 * s.v.array() + (T(1) - hyper_.beta2) * p->grad.array().square();
            const T bc1 = T(1) - std::pow(hyper_.beta1, T(s.step));
            const T bc2 = T(1) - std::pow(hyper_.beta2, T(s.step));
            Mat m_hat = s.m / bc1;
            Mat v_hat = s.v / bc2;
            p->value.array() -= hyper_.lr * (m_hat.array() / (v_hat.array().sqrt() + hyper_.eps) +
                                             hyper_.weight_decay * p->value.array());
        }
    }

    std::unordered_map<std::string, State>& states() { return states_; }
    const std::unordered_map<std::string, State>& states() const { return states_; }

private:
    Hyper hyper_;
    std::unordered_map<std::string, State> states_;
};

}  // namespace gcondnet
