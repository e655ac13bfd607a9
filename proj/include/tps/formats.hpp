#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "tps/errors.hpp"
#include "tps/nn/store.hpp"

namespace tps {

// Signal cube: one length-k series per pixel, stored (y, x, t) with t fastest
// so per-pixel signals are contiguous.
struct Cube {
    int h = 0, w = 0, k = 0;
    Eigen::ArrayXf data;

    Cube() = default;
    Cube(int h_, int w_, int k_) { resize(h_, w_, k_); }

    void resize(int h_, int w_, int k_) {
        if (h_ < 1 || w_ < 1 || k_ < 1)
            throw StructuralError("cube dims must be positive, got " + std::to_string(h_) +
                                  "x" + std::to_string(w_) + "x" + std::to_string(k_));
        h = h_;
        w = w_;
        k = k_;
        data.setZero(static_cast<Eigen::Index>(h) * w * k);
    }

    int64_t idx(int y, int x, int t) const {
        return (static_cast<int64_t>(y) * w + x) * k + t;
    }
    float at(int y, int x, int t) const { return data[idx(y, x, t)]; }
    float& at(int y, int x, int t) { return data[idx(y, x, t)]; }

    Eigen::Map<const Eigen::ArrayXf> signal(int y, int x) const {
        return {data.data() + idx(y, x, 0), k};
    }
    Eigen::Map<Eigen::ArrayXf> signal(int y, int x) {
        return {data.data() + idx(y, x, 0), k};
    }
};

// TPSC: magic, u32 version, u32 h, u32 w, u32 k, then h*w*k little-endian f32
// in (y, x, t) order.
void save_cube(const std::string& path, const Cube& cube);
Cube load_cube(const std::string& path);

// TPSD: magic, u32 version, u32 n_samples, u32 window, then per sample
// window f32 input followed by window f32 label.
struct RawDataset {
    int window = 0;
    std::vector<Eigen::ArrayXf> inputs;
    std::vector<Eigen::ArrayXf> labels;
};
void save_dataset(const std::string& path, const RawDataset& ds);
RawDataset load_dataset(const std::string& path);

// TPSW: magic, u32 version, u32 n_tensors, then per tensor u16 name length,
// name bytes, u8 rank, u32 dims, f32 data. Tensors serialize in store
// registration order and include the batch-norm running statistics.
void save_weights(const std::string& path, const nn::ParameterStore<float>& store);

// Loads into an existing store; every file tensor must match a store entry by
// name and shape, and every store entry must be present.
void load_weights(const std::string& path, nn::ParameterStore<float>& store);

}  // namespace tps
