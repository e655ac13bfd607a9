#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tps/formats.hpp"
#include "tps/tensor.hpp"
#include "tps/tsrnet.hpp"

namespace tps {

struct LossConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double delta = 0.07;

    void validate() const {
        if (alpha < 0 || beta < 0 || alpha + beta <= 0)
            throw ConfigError("loss weights must be non-negative and not both zero");
        if (delta < 0.0 || delta >= 1.0)
            throw ConfigError("loss.delta must be in [0,1)");
    }
};

template <typename S>
struct LossResult {
    double total = 0.0;
    double target_term = 0.0;      // unweighted
    double background_term = 0.0;  // unweighted
    Tensor3<S> dpred;
};

// Masked MSE on labeled steps plus a hinge on background steps exceeding
// delta. Means pool over the whole batch; a term with no entries is 0.
template <typename S>
LossResult<S> weighted_loss(const Tensor3<S>& pred, const Tensor3<S>& label,
                            const LossConfig& cfg, bool want_grad = true) {
    if (!pred.same_shape(label))
        throw StructuralError("loss: pred " + pred.shape_str() + " vs label " +
                              label.shape_str());
    cfg.validate();
    LossResult<S> out;
    int64_t n = pred.data.size();
    int64_t n_mask = (label.data > S(0)).count();
    int64_t n_bg = n - n_mask;
    S delta = static_cast<S>(cfg.delta);

    double sum_t = 0.0, sum_b = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        if (label.data[i] > S(0)) {
            double d = static_cast<double>(pred.data[i]) - label.data[i];
            sum_t += d * d;
        } else {
            double e = std::max(0.0, static_cast<double>(pred.data[i]) - delta);
            sum_b += e * e;
        }
    }
    out.target_term = n_mask ? sum_t / static_cast<double>(n_mask) : 0.0;
    out.background_term = n_bg ? sum_b / static_cast<double>(n_bg) : 0.0;
    out.total = cfg.alpha * out.target_term + cfg.beta * out.background_term;

    if (want_grad) {
        out.dpred.resize(pred.b, pred.c, pred.l);
        S ct = n_mask ? static_cast<S>(2.0 * cfg.alpha / n_mask) : S(0);
        S cb = n_bg ? static_cast<S>(2.0 * cfg.beta / n_bg) : S(0);
        for (int64_t i = 0; i < n; ++i) {
            if (label.data[i] > S(0))
                out.dpred.data[i] = ct * (pred.data[i] - label.data[i]);
            else
                out.dpred.data[i] = cb * std::max(S(0), pred.data[i] - delta);
        }
    }
    return out;
}

struct TrainConfig {
    double lr = 1e-3;
    int batch = 1000;
    int epochs = 200;
    uint64_t seed = 42;
    LossConfig loss;
    int checkpoint_every = 0;     // epochs; 0 = no checkpoints
    double plateau_eps = 0.0;     // min relative improvement; used with patience
    int plateau_patience = 0;     // epochs without improvement to stop; 0 = off
    int workers = 1;

    void validate() const {
        if (lr <= 0 || batch < 1 || epochs < 1 || workers < 1)
            throw ConfigError("train config values must be positive");
        loss.validate();
    }
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double loss_target = 0.0;
    double loss_background = 0.0;
    int64_t wall_ms = 0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    bool stopped_early = false;
};

// Shuffled minibatch Adam over the dataset. Checkpoints (when enabled) go to
// checkpoint_dir as checkpoint_NNNN.tpsw. A non-finite loss aborts with
// epoch/step context.
TrainResult train_model(TsrNetF& model, const RawDataset& ds, const TrainConfig& cfg,
                        const std::string& checkpoint_dir = "");

}  // namespace tps
