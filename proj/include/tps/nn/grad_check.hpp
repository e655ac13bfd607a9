#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tps/nn/store.hpp"
#include "tps/rng.hpp"

namespace tps::nn {

// rel = |a-n| / max(floor, |a|, |n|); the floor keeps near-zero gradients from
// blowing up the ratio.
inline double rel_err(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) /
           std::max({floor, std::abs(analytic), std::abs(numeric)});
}

struct GradCheckReport {
    double max_rel = 0.0;
    std::string worst;   // "param/name[i]" or "input[i]"
    int checked = 0;
    int skipped = 0;     // coordinates whose secant straddled a kink
    bool pass(double tol) const { return max_rel <= tol; }
};

// A secant across a relu kink or a max-pool argmax flip does not estimate the
// derivative, so comparing it to the analytic gradient is meaningless there.
// Secants at eps and eps/2 agree to O(eps^2) on a smooth piece and disagree
// grossly across a kink, which gives a validity test that uses only function
// values and therefore cannot hide a wrong backward pass. Callers that probe
// a whole relu network enable skip_kinks; a genuinely wrong gradient still
// fails at the smooth coordinates, which dominate.
inline bool secants_agree(double s1, double s2, double tol) {
    return rel_err(s1, s2) <= tol;
}

// Central-difference check of d(loss)/d(theta) against analytic grads already
// accumulated in the store, and optionally d(loss)/d(input). `loss` must be a
// pure function of current store values and the input vector. Coordinates are
// subsampled when a tensor is larger than max_per_tensor.
template <typename S>
GradCheckReport grad_check_params(
    ParameterStore<S>& store, const std::function<double()>& loss,
    double eps = 1e-3, int max_per_tensor = 8, uint64_t seed = 0,
    bool skip_kinks = false, double kink_tol = 1e-4) {
    GradCheckReport rep;
    Rng rng = Rng::derive(seed, "grad_check/coords");
    for (auto& p : store) {
        if (!p.trainable) continue;
        int64_t n = p.value.size();
        std::vector<int64_t> coords;
        if (n <= max_per_tensor) {
            coords.resize(n);
            for (int64_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            for (int i = 0; i < max_per_tensor; ++i)
                coords.push_back(rng.uniform_int(0, n - 1));
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        }
        for (int64_t i : coords) {
            S keep = p.value[i];
            p.value[i] = keep + static_cast<S>(eps);
            double lp = loss();
            p.value[i] = keep - static_cast<S>(eps);
            double lm = loss();
            double numeric = (lp - lm) / (2.0 * eps);
            if (skip_kinks) {
                p.value[i] = keep + static_cast<S>(eps / 2);
                double lp2 = loss();
                p.value[i] = keep - static_cast<S>(eps / 2);
                double lm2 = loss();
                if (!secants_agree(numeric, (lp2 - lm2) / eps, kink_tol)) {
                    p.value[i] = keep;
                    ++rep.skipped;
                    continue;
                }
            }
            p.value[i] = keep;
            double e = rel_err(static_cast<double>(p.grad[i]), numeric);
            ++rep.checked;
            if (e > rep.max_rel) {
                rep.max_rel = e;
                rep.worst = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return rep;
}

template <typename S>
GradCheckReport grad_check_input(
    Eigen::Array<S, Eigen::Dynamic, 1>& x,
    const Eigen::Array<S, Eigen::Dynamic, 1>& dx_analytic,
    const std::function<double()>& loss, double eps = 1e-3,
    int max_coords = 32, uint64_t seed = 0,
    bool skip_kinks = false, double kink_tol = 1e-4) {
    GradCheckReport rep;
    Rng rng = Rng::derive(seed, "grad_check/input");
    int64_t n = x.size();
    std::vector<int64_t> coords;
    if (n <= max_coords) {
        coords.resize(n);
        for (int64_t i = 0; i < n; ++i) coords[i] = i;
    } else {
        for (int i = 0; i < max_coords; ++i) coords.push_back(rng.uniform_int(0, n - 1));
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (int64_t i : coords) {
        S keep = x[i];
        x[i] = keep + static_cast<S>(eps);
        double lp = loss();
        x[i] = keep - static_cast<S>(eps);
        double lm = loss();
        double numeric = (lp - lm) / (2.0 * eps);
        if (skip_kinks) {
            x[i] = keep + static_cast<S>(eps / 2);
            double lp2 = loss();
            x[i] = keep - static_cast<S>(eps / 2);
            double lm2 = loss();
            if (!secants_agree(numeric, (lp2 - lm2) / eps, kink_tol)) {
                x[i] = keep;
                ++rep.skipped;
                continue;
            }
        }
        x[i] = keep;
        double e = rel_err(static_cast<double>(dx_analytic[i]), numeric);
        ++rep.checked;
        if (e > rep.max_rel) {
            rep.max_rel = e;
            rep.worst = "input[" + std::to_string(i) + "]";
        }
    }
    return rep;
}

}  // namespace tps::nn
