#pragma once

#include <Eigen/Dense>
#include <string>

#include "tps/errors.hpp"

namespace tps {

// Batched 1D feature tensor, shape (batch, channels, length). Memory is
// channel-fastest: offset(b, c, l) = (b*L + l)*C + c. That makes each sample a
// contiguous col-major C×L matrix, which is what the conv GEMM path wants.
template <typename S>
struct Tensor3 {
    using Arr = Eigen::Array<S, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;  // col-major
    using MatMap = Eigen::Map<Mat>;
    using ConstMatMap = Eigen::Map<const Mat>;

    Arr data;
    int b = 0, c = 0, l = 0;

    Tensor3() = default;
    Tensor3(int b_, int c_, int l_) { resize(b_, c_, l_); }

    void resize(int b_, int c_, int l_) {
        if (b_ < 0 || c_ < 0 || l_ < 0)
            throw StructuralError("tensor dims must be non-negative, got (" +
                                  std::to_string(b_) + "," + std::to_string(c_) + "," +
                                  std::to_string(l_) + ")");
        b = b_; c = c_; l = l_;
        data.setZero(static_cast<Eigen::Index>(b) * c * l);
    }

    Eigen::Index size() const { return data.size(); }

    S& at(int bi, int ci, int li) {
        return data[(static_cast<Eigen::Index>(bi) * l + li) * c + ci];
    }
    S at(int bi, int ci, int li) const {
        return data[(static_cast<Eigen::Index>(bi) * l + li) * c + ci];
    }

    // sample bi as a C×L matrix (channels down, positions across)
    MatMap sample(int bi) {
        return MatMap(data.data() + static_cast<Eigen::Index>(bi) * c * l, c, l);
    }
    ConstMatMap sample(int bi) const {
        return ConstMatMap(data.data() + static_cast<Eigen::Index>(bi) * c * l, c, l);
    }

    bool same_shape(const Tensor3& o) const { return b == o.b && c == o.c && l == o.l; }

    std::string shape_str() const {
        return "(" + std::to_string(b) + "," + std::to_string(c) + "," +
               std::to_string(l) + ")";
    }

    bool all_finite() const { return data.isFinite().all(); }
};

using Tensor3f = Tensor3<float>;
using Tensor3d = Tensor3<double>;

template <typename S>
void require_shape(const Tensor3<S>& t, int b, int c, int l, const char* who) {
    if (t.b != b || t.c != c || t.l != l)
        throw StructuralError(std::string(who) + ": expected shape (" +
                              std::to_string(b) + "," + std::to_string(c) + "," +
                              std::to_string(l) + "), got " + t.shape_str());
}

}  // namespace tps
