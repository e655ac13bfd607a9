#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tps/errors.hpp"
#include "tps/rng.hpp"

namespace tps::nn {

enum class Init { kaiming_uniform, zeros, ones };

// One named tensor. Flat data is row-major over the declared shape; that is
// also the order the weight file uses.
template <typename S>
struct Param {
    std::string name;
    std::vector<int> shape;
    Eigen::Array<S, Eigen::Dynamic, 1> value, grad, m, v;
    bool trainable = true;
    Init init = Init::zeros;
    int fan_in = 0;  // for kaiming_uniform

    Eigen::Index size() const { return value.size(); }
};

// Owns every trainable weight plus batch-norm running statistics. Layers hold
// integer handles into it. Initialization draws a per-parameter stream keyed
// by name, so registration order never changes the weights.
template <typename S>
class ParameterStore {
public:
    int add(const std::string& name, std::vector<int> shape, Init init,
            int fan_in = 0, bool trainable = true) {
        if (index_.count(name))
            throw StructuralError("duplicate parameter name: " + name);
        Eigen::Index n = 1;
        for (int d : shape) {
            if (d <= 0) throw StructuralError("bad dim in parameter " + name);
            n *= d;
        }
        Param<S> p;
        p.name = name;
        p.shape = std::move(shape);
        p.value.setZero(n);
        p.grad.setZero(n);
        p.trainable = trainable;
        p.init = init;
        p.fan_in = fan_in;
        if (init == Init::ones) p.value.setOnes();
        index_[name] = static_cast<int>(params_.size());
        params_.push_back(std::move(p));
        return static_cast<int>(params_.size()) - 1;
    }

    void init_params(uint64_t seed) {
        for (auto& p : params_) {
            switch (p.init) {
                case Init::zeros: p.value.setZero(); break;
                case Init::ones: p.value.setOnes(); break;
                case Init::kaiming_uniform: {
                    if (p.fan_in <= 0)
                        throw StructuralError("kaiming init needs fan_in: " + p.name);
                    double bound = std::sqrt(6.0 / p.fan_in);
                    Rng rng = Rng::derive(seed, "init/" + p.name);
                    for (Eigen::Index i = 0; i < p.size(); ++i)
                        p.value[i] = static_cast<S>(rng.uniform(-bound, bound));
                    break;
                }
            }
            p.grad.setZero();
            p.m.resize(0);
            p.v.resize(0);
        }
    }

    Param<S>& at(int id) { return params_[id]; }
    const Param<S>& at(int id) const { return params_[id]; }

    int find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? -1 : it->second;
    }
    Param<S>& by_name(const std::string& name) {
        int id = find(name);
        if (id < 0) throw StructuralError("unknown parameter: " + name);
        return params_[id];
    }

    size_t count() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    int64_t trainable_parameters() const {
        int64_t n = 0;
        for (const auto& p : params_)
            if (p.trainable) n += p.size();
        return n;
    }

    void zero_grads() {
        for (auto& p : params_) p.grad.setZero();
    }

private:
    std::vector<Param<S>> params_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace tps::nn
