#pragma once

#include <cmath>

#include "tps/nn/store.hpp"

namespace tps::nn {

// Adam with bias correction. Moment buffers live inside the Param entries so a
// checkpoint reload starts optimizer state from scratch, which is intended.
template <typename S>
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0 || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || eps <= 0)
            throw ConfigError("adam: bad hyperparameters");
    }

    // One update; consumes (and zeroes) the accumulated gradients.
    void step(ParameterStore<S>& store) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& p : store) {
            if (!p.trainable) continue;
            if (p.m.size() != p.size()) {
                p.m.setZero(p.size());
                p.v.setZero(p.size());
            }
            p.m = static_cast<S>(beta1_) * p.m + static_cast<S>(1.0 - beta1_) * p.grad;
            p.v = static_cast<S>(beta2_) * p.v +
                  static_cast<S>(1.0 - beta2_) * p.grad.square();
            p.value -= static_cast<S>(lr_) * (p.m / static_cast<S>(bc1)) /
                       ((p.v / static_cast<S>(bc2)).sqrt() + static_cast<S>(eps_));
            p.grad.setZero();
        }
    }

    int64_t steps() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

}  // namespace tps::nn
