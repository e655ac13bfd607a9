#pragma once

#include <Eigen/Dense>
#include <cstring>
#include <string>
#include <vector>

#include "tps/nn/store.hpp"
#include "tps/parallel.hpp"
#include "tps/rng.hpp"
#include "tps/tensor.hpp"

namespace tps::nn {

// How a forward pass runs. Gradient checking wants caches without train-mode
// statistics or dropout, hence the separate trace flag.
struct RunCtx {
    bool training = false;
    bool trace = false;
    ThreadPool* pool = nullptr;  // null → serial
    bool check_finite = true;

    bool want_backward() const { return training || trace; }
};

template <typename F>
void for_each_sample(const RunCtx& ctx, int b, F&& f) {
    if (ctx.pool && ctx.pool->size() > 1 && b > 1) {
        ctx.pool->parallel_for(b, [&](int64_t s, int64_t e) {
            for (int64_t i = s; i < e; ++i) f(static_cast<int>(i));
        });
    } else {
        for (int i = 0; i < b; ++i) f(i);
    }
}

template <typename S>
void check_finite(const Tensor3<S>& t, const std::string& who, const RunCtx& ctx) {
    if (ctx.check_finite && !t.all_finite())
        throw NumericalError(who + ": non-finite values in output " + t.shape_str());
}

// ---- free tensor helpers ----------------------------------------------------

template <typename S>
Tensor3<S> concat_channels(const Tensor3<S>& a, const Tensor3<S>& b) {
    if (a.b != b.b || a.l != b.l)
        throw StructuralError("concat_channels: shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
    Tensor3<S> out(a.b, a.c + b.c, a.l);
    for (int i = 0; i < a.b; ++i) {
        auto om = out.sample(i);
        om.topRows(a.c) = a.sample(i);
        om.bottomRows(b.c) = b.sample(i);
    }
    return out;
}

template <typename S>
void split_channels(const Tensor3<S>& dcat, Tensor3<S>& da, Tensor3<S>& db, int ca) {
    da.resize(dcat.b, ca, dcat.l);
    db.resize(dcat.b, dcat.c - ca, dcat.l);
    for (int i = 0; i < dcat.b; ++i) {
        auto dm = dcat.sample(i);
        da.sample(i) = dm.topRows(ca);
        db.sample(i) = dm.bottomRows(dcat.c - ca);
    }
}

template <typename S>
Tensor3<S> hadamard(const Tensor3<S>& a, const Tensor3<S>& b) {
    if (!a.same_shape(b))
        throw StructuralError("hadamard: shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
    Tensor3<S> out = a;
    out.data *= b.data;
    return out;
}

// ---- Conv1d ------------------------------------------------------------------
//
// Cross-correlation (no kernel flip), zero padding. Weight shape
// (c_out, c_in/groups, k); each sample runs as one GEMM per group over an
// im2col matrix whose rows are tap-major, channel-fastest — the same order the
// input tensor stores channels, so gathering is plain memcpy.

template <typename S>
class Conv1d {
public:
    using Mat = typename Tensor3<S>::Mat;

    Conv1d() = default;
    Conv1d(ParameterStore<S>& store, const std::string& name, int cin, int cout,
           int k, int stride = 1, int pad = 0, int groups = 1)
        : name_(name), cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad),
          groups_(groups) {
        if (k < 1 || stride < 1 || pad < 0 || groups < 1 || cin % groups || cout % groups)
            throw StructuralError(name + ": bad conv geometry (cin=" +
                                  std::to_string(cin) + ", cout=" + std::to_string(cout) +
                                  ", k=" + std::to_string(k) + ", stride=" +
                                  std::to_string(stride) + ", pad=" + std::to_string(pad) +
                                  ", groups=" + std::to_string(groups) + ")");
        wid_ = store.add(name + ".w", {cout, cin / groups, k}, Init::kaiming_uniform,
                         (cin / groups) * k);
        bid_ = store.add(name + ".b", {cout}, Init::zeros);
    }

    int out_len(int l) const { return (l + 2 * pad_ - k_) / stride_ + 1; }
    int w_id() const { return wid_; }
    int b_id() const { return bid_; }

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        if (x.c != cin_)
            throw StructuralError(name_ + ": expected " + std::to_string(cin_) +
                                  " input channels, got " + x.shape_str());
        int lo = out_len(x.l);
        if (lo < 1)
            throw StructuralError(name_ + ": output length < 1 for input length " +
                                  std::to_string(x.l));
        if (ctx.want_backward()) x_cache_ = x;

        Tensor3<S> out(x.b, cout_, lo);
        const auto& w = store.at(wid_).value;
        const auto& bias = store.at(bid_).value;

        if (groups_ == cin_ && groups_ == cout_) {
            forward_depthwise(w, bias, x, out, ctx);
        } else {
            Mat wm = gemm_weight(w);
            int cing = cin_ / groups_, coutg = cout_ / groups_;
            for_each_sample(ctx, x.b, [&](int i) {
                auto xm = x.sample(i);
                auto ym = out.sample(i);
                Mat m(cing * k_, lo);
                for (int g = 0; g < groups_; ++g) {
                    im2col(xm, g * cing, cing, lo, m);
                    ym.middleRows(g * coutg, coutg).noalias() =
                        wm.middleRows(g * coutg, coutg) * m;
                }
                ym.colwise() +=
                    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias.data(), cout_);
            });
        }
        check_finite(out, name_, ctx);
        return out;
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        const Tensor3<S>& x = x_cache_;
        require_shape(dy, x.b, cout_, out_len(x.l), (name_ + ".backward").c_str());
        Tensor3<S> dx(x.b, cin_, x.l);
        auto& wp = store.at(wid_);
        auto& bp = store.at(bid_);

        if (groups_ == cin_ && groups_ == cout_) {
            backward_depthwise(wp, bp, x, dy, dx, ctx);
            return dx;
        }

        Mat wm = gemm_weight(wp.value);
        int cing = cin_ / groups_, coutg = cout_ / groups_;
        int lo = dy.l;
        int nth = (ctx.pool && x.b > 1) ? ctx.pool->size() : 1;
        std::vector<Mat> dwm(nth, Mat::Zero(cout_, cing * k_));
        std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(
            nth, Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(cout_));
        int64_t chunk = nth > 1 ? (x.b + nth - 1) / nth : x.b;

        for_each_sample(ctx, x.b, [&](int i) {
            int slot = nth > 1 ? static_cast<int>(i / chunk) : 0;
            auto xm = x.sample(i);
            auto dym = dy.sample(i);
            auto dxm = dx.sample(i);
            Mat m(cing * k_, lo), g(cing * k_, lo);
            for (int gi = 0; gi < groups_; ++gi) {
                im2col(xm, gi * cing, cing, lo, m);
                auto dyg = dym.middleRows(gi * coutg, coutg);
                dwm[slot].middleRows(gi * coutg, coutg).noalias() += dyg * m.transpose();
                g.noalias() = wm.middleRows(gi * coutg, coutg).transpose() * dyg;
                col2im_add(g, gi * cing, cing, lo, dxm);
            }
            db[slot] += dym.rowwise().sum();
        });
        for (int t = 1; t < nth; ++t) {
            dwm[0] += dwm[t];
            db[0] += db[t];
        }
        scatter_dw(dwm[0], wp.grad);
        Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(bp.grad.data(), cout_) += db[0];
        return dx;
    }

private:
    // flat (co, ci, t) row-major → col-major (cout × cing*k), columns tap-major
    Mat gemm_weight(const Eigen::Array<S, Eigen::Dynamic, 1>& w) const {
        int cing = cin_ / groups_;
        Mat wm(cout_, cing * k_);
        for (int co = 0; co < cout_; ++co)
            for (int ci = 0; ci < cing; ++ci)
                for (int t = 0; t < k_; ++t)
                    wm(co, t * cing + ci) = w[(static_cast<Eigen::Index>(co) * cing + ci) * k_ + t];
        return wm;
    }

    void scatter_dw(const Mat& dwm, Eigen::Array<S, Eigen::Dynamic, 1>& grad) const {
        int cing = cin_ / groups_;
        for (int co = 0; co < cout_; ++co)
            for (int ci = 0; ci < cing; ++ci)
                for (int t = 0; t < k_; ++t)
                    grad[(static_cast<Eigen::Index>(co) * cing + ci) * k_ + t] +=
                        dwm(co, t * cing + ci);
    }

    template <typename XM>
    void im2col(const XM& xm, int c0, int cg, int lo, Mat& m) const {
        for (int j = 0; j < lo; ++j) {
            int base = j * stride_ - pad_;
            S* col = m.data() + static_cast<Eigen::Index>(j) * m.rows();
            for (int t = 0; t < k_; ++t) {
                int src = base + t;
                if (src >= 0 && src < static_cast<int>(xm.cols()))
                    std::memcpy(col + t * cg, xm.data() + static_cast<Eigen::Index>(src) * xm.rows() + c0,
                                sizeof(S) * cg);
                else
                    std::memset(col + t * cg, 0, sizeof(S) * cg);
            }
        }
    }

    template <typename DXM>
    void col2im_add(const Mat& g, int c0, int cg, int lo, DXM dxm) const {
        int l = static_cast<int>(dxm.cols());
        for (int j = 0; j < lo; ++j) {
            int base = j * stride_ - pad_;
            const S* col = g.data() + static_cast<Eigen::Index>(j) * g.rows();
            for (int t = 0; t < k_; ++t) {
                int src = base + t;
                if (src < 0 || src >= l) continue;
                Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>(
                    dxm.data() + static_cast<Eigen::Index>(src) * dxm.rows() + c0, cg) +=
                    Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>(col + t * cg, cg);
            }
        }
    }

    // depthwise fast path: per tap, a strided column view times per-channel weights
    void forward_depthwise(const Eigen::Array<S, Eigen::Dynamic, 1>& w,
                           const Eigen::Array<S, Eigen::Dynamic, 1>& bias,
                           const Tensor3<S>& x, Tensor3<S>& out, const RunCtx& ctx) const {
        int c = cin_, lo = out.l;
        Mat wt(c, k_);  // wt(ch, t)
        for (int ch = 0; ch < c; ++ch)
            for (int t = 0; t < k_; ++t) wt(ch, t) = w[static_cast<Eigen::Index>(ch) * k_ + t];
        for_each_sample(ctx, x.b, [&](int i) {
            Mat padded = Mat::Zero(c, x.l + 2 * pad_);
            padded.middleCols(pad_, x.l) = x.sample(i);
            auto ym = out.sample(i);
            ym.setZero();
            for (int t = 0; t < k_; ++t) {
                Eigen::Map<const Mat, 0, Eigen::OuterStride<>> shifted(
                    padded.data() + static_cast<Eigen::Index>(t) * c, c, lo,
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(c) * stride_));
                ym.array() += shifted.array().colwise() * wt.col(t).array();
            }
            ym.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias.data(), c);
        });
    }

    void backward_depthwise(Param<S>& wp, Param<S>& bp, const Tensor3<S>& x,
                            const Tensor3<S>& dy, Tensor3<S>& dx, const RunCtx& ctx) {
        int c = cin_, lo = dy.l;
        Mat wt(c, k_);
        for (int ch = 0; ch < c; ++ch)
            for (int t = 0; t < k_; ++t)
                wt(ch, t) = wp.value[static_cast<Eigen::Index>(ch) * k_ + t];

        int nth = (ctx.pool && x.b > 1) ? ctx.pool->size() : 1;
        std::vector<Mat> dwt(nth, Mat::Zero(c, k_));
        std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(
            nth, Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(c));
        int64_t chunk = nth > 1 ? (x.b + nth - 1) / nth : x.b;

        for_each_sample(ctx, x.b, [&](int i) {
            int slot = nth > 1 ? static_cast<int>(i / chunk) : 0;
            Mat padded = Mat::Zero(c, x.l + 2 * pad_);
            padded.middleCols(pad_, x.l) = x.sample(i);
            Mat dpad = Mat::Zero(c, x.l + 2 * pad_);
            auto dym = dy.sample(i);
            for (int t = 0; t < k_; ++t) {
                Eigen::Map<const Mat, 0, Eigen::OuterStride<>> shifted(
                    padded.data() + static_cast<Eigen::Index>(t) * c, c, lo,
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(c) * stride_));
                dwt[slot].col(t) += (shifted.array() * dym.array()).rowwise().sum().matrix();
                Eigen::Map<Mat, 0, Eigen::OuterStride<>> dshift(
                    dpad.data() + static_cast<Eigen::Index>(t) * c, c, lo,
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(c) * stride_));
                dshift.array() += dym.array().colwise() * wt.col(t).array();
            }
            dx.sample(i) = dpad.middleCols(pad_, x.l);
            db[slot] += dym.rowwise().sum();
        });
        for (int t = 1; t < nth; ++t) {
            dwt[0] += dwt[t];
            db[0] += db[t];
        }
        for (int ch = 0; ch < c; ++ch)
            for (int t = 0; t < k_; ++t)
                wp.grad[static_cast<Eigen::Index>(ch) * k_ + t] += dwt[0](ch, t);
        Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(bp.grad.data(), c) += db[0];
    }

    std::string name_;
    int wid_ = -1, bid_ = -1;
    int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0, groups_ = 1;
    Tensor3<S> x_cache_;
};

// ---- ConvTranspose1d ---------------------------------------------------------
//
// Exact adjoint of Conv1d with the same (k, stride, pad): scatter version of
// the conv gather. Weight shape (c_in, c_out, k).

template <typename S>
class ConvTranspose1d {
public:
    using Mat = typename Tensor3<S>::Mat;

    ConvTranspose1d() = default;
    ConvTranspose1d(ParameterStore<S>& store, const std::string& name, int cin,
                    int cout, int k, int stride = 1, int pad = 0)
        : name_(name), cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
        if (k < 1 || stride < 1 || pad < 0)
            throw StructuralError(name + ": bad conv-transpose geometry");
        wid_ = store.add(name + ".w", {cin, cout, k}, Init::kaiming_uniform, cin * k);
        bid_ = store.add(name + ".b", {cout}, Init::zeros);
    }

    int out_len(int l) const { return (l - 1) * stride_ - 2 * pad_ + k_; }
    int w_id() const { return wid_; }

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        if (x.c != cin_)
            throw StructuralError(name_ + ": expected " + std::to_string(cin_) +
                                  " input channels, got " + x.shape_str());
        int lo = out_len(x.l);
        if (lo < 1)
            throw StructuralError(name_ + ": output length < 1");
        if (ctx.want_backward()) x_cache_ = x;

        Tensor3<S> out(x.b, cout_, lo);
        Mat wcat = cat_weight(store.at(wid_).value);  // (cout*k × cin)
        const auto& bias = store.at(bid_).value;
        for_each_sample(ctx, x.b, [&](int i) {
            auto xm = x.sample(i);
            auto ym = out.sample(i);
            Mat g(cout_ * k_, x.l);
            g.noalias() = wcat * xm;
            // scatter: input position i contributes to output j = i*stride + t - pad
            for (int ii = 0; ii < x.l; ++ii) {
                const S* col = g.data() + static_cast<Eigen::Index>(ii) * g.rows();
                for (int t = 0; t < k_; ++t) {
                    int j = ii * stride_ + t - pad_;
                    if (j < 0 || j >= lo) continue;
                    Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>(
                        ym.data() + static_cast<Eigen::Index>(j) * cout_, cout_) +=
                        Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>(col + t * cout_, cout_);
                }
            }
            ym.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias.data(), cout_);
        });
        check_finite(out, name_, ctx);
        return out;
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        const Tensor3<S>& x = x_cache_;
        require_shape(dy, x.b, cout_, out_len(x.l), (name_ + ".backward").c_str());
        Tensor3<S> dx(x.b, cin_, x.l);
        auto& wp = store.at(wid_);
        auto& bp = store.at(bid_);
        Mat wcat = cat_weight(wp.value);

        int nth = (ctx.pool && x.b > 1) ? ctx.pool->size() : 1;
        std::vector<Mat> dwcat(nth, Mat::Zero(cout_ * k_, cin_));
        std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(
            nth, Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(cout_));
        int64_t chunk = nth > 1 ? (x.b + nth - 1) / nth : x.b;

        for_each_sample(ctx, x.b, [&](int i) {
            int slot = nth > 1 ? static_cast<int>(i / chunk) : 0;
            auto xm = x.sample(i);
            auto dym = dy.sample(i);
            // gather dy back into the (cout*k × l) frame of the forward scatter
            Mat m = Mat::Zero(cout_ * k_, x.l);
            for (int ii = 0; ii < x.l; ++ii) {
                S* col = m.data() + static_cast<Eigen::Index>(ii) * m.rows();
                for (int t = 0; t < k_; ++t) {
                    int j = ii * stride_ + t - pad_;
                    if (j < 0 || j >= dy.l) continue;
                    std::memcpy(col + t * cout_,
                                dym.data() + static_cast<Eigen::Index>(j) * cout_,
                                sizeof(S) * cout_);
                }
            }
            dx.sample(i).noalias() = wcat.transpose() * m;
            dwcat[slot].noalias() += m * xm.transpose();
            db[slot] += dym.rowwise().sum();
        });
        for (int t = 1; t < nth; ++t) {
            dwcat[0] += dwcat[t];
            db[0] += db[t];
        }
        for (int ci = 0; ci < cin_; ++ci)
            for (int co = 0; co < cout_; ++co)
                for (int t = 0; t < k_; ++t)
                    wp.grad[(static_cast<Eigen::Index>(ci) * cout_ + co) * k_ + t] +=
                        dwcat[0](t * cout_ + co, ci);
        Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(bp.grad.data(), cout_) += db[0];
        return dx;
    }

private:
    // flat (ci, co, t) row-major → (cout*k × cin), rows tap-major
    Mat cat_weight(const Eigen::Array<S, Eigen::Dynamic, 1>& w) const {
        Mat wcat(cout_ * k_, cin_);
        for (int ci = 0; ci < cin_; ++ci)
            for (int co = 0; co < cout_; ++co)
                for (int t = 0; t < k_; ++t)
                    wcat(t * cout_ + co, ci) =
                        w[(static_cast<Eigen::Index>(ci) * cout_ + co) * k_ + t];
        return wcat;
    }

    std::string name_;
    int wid_ = -1, bid_ = -1;
    int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Tensor3<S> x_cache_;
};

// ---- BatchNorm1d ---------------------------------------------------------
//
// Per-channel over (batch, length). Biased variance for both normalization and
// the running update; running stats live in the store as non-trainable params.

template <typename S>
class BatchNorm1d {
public:
    using Vec = Eigen::Array<S, Eigen::Dynamic, 1>;

    BatchNorm1d() = default;
    BatchNorm1d(ParameterStore<S>& store, const std::string& name, int c,
                double eps = 1e-5, double momentum = 0.1)
        : name_(name), c_(c), eps_(eps), momentum_(momentum) {
        gid_ = store.add(name + ".gamma", {c}, Init::ones);
        bid_ = store.add(name + ".beta", {c}, Init::zeros);
        rmid_ = store.add(name + ".rmean", {c}, Init::zeros, 0, false);
        rvid_ = store.add(name + ".rvar", {c}, Init::ones, 0, false);
    }

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        if (x.c != c_)
            throw StructuralError(name_ + ": expected " + std::to_string(c_) +
                                  " channels, got " + x.shape_str());
        Vec mean(c_), var(c_);
        if (ctx.training) {
            if (static_cast<int64_t>(x.b) * x.l < 2)
                throw StructuralError(name_ +
                                      ": training stats need more than one position");
            Eigen::Matrix<S, Eigen::Dynamic, 1> sum =
                Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(c_);
            Eigen::Matrix<S, Eigen::Dynamic, 1> sumsq = sum;
            for (int i = 0; i < x.b; ++i) {
                auto xm = x.sample(i);
                sum += xm.rowwise().sum();
                sumsq += xm.array().square().matrix().rowwise().sum();
            }
            S n = static_cast<S>(static_cast<int64_t>(x.b) * x.l);
            mean = sum.array() / n;
            var = (sumsq.array() / n - mean.square()).max(S(0));
            auto& rm = store.at(rmid_).value;
            auto& rv = store.at(rvid_).value;
            rm = (1 - momentum_) * rm + momentum_ * mean;
            rv = (1 - momentum_) * rv + momentum_ * var;
        } else {
            mean = store.at(rmid_).value;
            var = store.at(rvid_).value;
        }
        Vec inv_std = (var + static_cast<S>(eps_)).sqrt().inverse();
        const auto& gamma = store.at(gid_).value;
        const auto& beta = store.at(bid_).value;

        Tensor3<S> out(x.b, c_, x.l);
        Tensor3<S>* xhat = nullptr;
        if (ctx.want_backward()) {
            xhat_cache_.resize(x.b, c_, x.l);
            xhat = &xhat_cache_;
            inv_std_cache_ = inv_std;
            train_stats_ = ctx.training;
        }
        for_each_sample(ctx, x.b, [&](int i) {
            auto xm = x.sample(i);
            auto om = out.sample(i);
            om.array() = (xm.array().colwise() - mean) .colwise() * inv_std;
            if (xhat) xhat->sample(i) = om;
            om.array() = (om.array().colwise() * gamma).colwise() + beta;
        });
        check_finite(out, name_, ctx);
        return out;
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        const Tensor3<S>& xhat = xhat_cache_;
        require_shape(dy, xhat.b, c_, xhat.l, (name_ + ".backward").c_str());
        const auto& gamma = store.at(gid_).value;
        auto& dgamma = store.at(gid_).grad;
        auto& dbeta = store.at(bid_).grad;

        // per-channel sums (serial over samples; cheap relative to convs)
        Eigen::Matrix<S, Eigen::Dynamic, 1> sum_dy =
            Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(c_);
        Eigen::Matrix<S, Eigen::Dynamic, 1> sum_dy_xhat = sum_dy;
        for (int i = 0; i < dy.b; ++i) {
            auto dym = dy.sample(i);
            sum_dy += dym.rowwise().sum();
            sum_dy_xhat += (dym.array() * xhat.sample(i).array()).matrix().rowwise().sum();
        }
        dgamma += sum_dy_xhat.array();
        dbeta += sum_dy.array();

        Tensor3<S> dx(dy.b, c_, dy.l);
        if (train_stats_) {
            S n = static_cast<S>(static_cast<int64_t>(dy.b) * dy.l);
            Vec mean_dy = sum_dy.array() / n;
            Vec mean_dy_xhat = sum_dy_xhat.array() / n;
            Vec scale = gamma * inv_std_cache_;
            for_each_sample(ctx, dy.b, [&](int i) {
                auto dym = dy.sample(i);
                auto xhm = xhat.sample(i);
                dx.sample(i).array() =
                    ((dym.array().colwise() - mean_dy) -
                     (xhm.array().colwise() * mean_dy_xhat))
                        .colwise() * scale;
            });
        } else {
            Vec scale = gamma * inv_std_cache_;
            for_each_sample(ctx, dy.b, [&](int i) {
                dx.sample(i).array() = dy.sample(i).array().colwise() * scale;
            });
        }
        return dx;
    }

private:
    std::string name_;
    int c_ = 0;
    int gid_ = -1, bid_ = -1, rmid_ = -1, rvid_ = -1;
    double eps_ = 1e-5, momentum_ = 0.1;
    Tensor3<S> xhat_cache_;
    Vec inv_std_cache_;
    bool train_stats_ = false;
};

// ---- activations -----------------------------------------------------------

template <typename S>
class ReLU {
public:
    Tensor3<S> forward(const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> out = x;
        out.data = out.data.max(S(0));
        if (ctx.want_backward()) y_cache_ = out;
        return out;
    }
    Tensor3<S> backward(const Tensor3<S>& dy) {
        Tensor3<S> dx = dy;
        dx.data *= (y_cache_.data > S(0)).template cast<S>();
        return dx;
    }

private:
    Tensor3<S> y_cache_;
};

template <typename S>
class Sigmoid {
public:
    Tensor3<S> forward(const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> out = x;
        out.data = (S(1) / (S(1) + (-out.data).exp()));
        if (ctx.want_backward()) y_cache_ = out;
        return out;
    }
    Tensor3<S> backward(const Tensor3<S>& dy) {
        Tensor3<S> dx = dy;
        dx.data *= y_cache_.data * (S(1) - y_cache_.data);
        return dx;
    }

private:
    Tensor3<S> y_cache_;
};

// ---- MaxPool1d ---------------------------------------------------------------

template <typename S>
class MaxPool1d {
public:
    MaxPool1d() = default;
    MaxPool1d(const std::string& name, int k = 2, int stride = 2)
        : name_(name), k_(k), stride_(stride) {
        if (k < 1 || stride < 1) throw StructuralError(name + ": bad pool geometry");
    }

    int out_len(int l) const { return (l - k_) / stride_ + 1; }

    Tensor3<S> forward(const Tensor3<S>& x, const RunCtx& ctx) {
        // truncating division makes out_len(l) == 1 for l in [1, k), so guard on l
        if (x.l < k_) throw StructuralError(name_ + ": input shorter than kernel");
        int lo = out_len(x.l);
        Tensor3<S> out(x.b, x.c, lo);
        bool keep = ctx.want_backward();
        if (keep) {
            argmax_.assign(static_cast<size_t>(x.b) * x.c * lo, 0);
            in_len_ = x.l;
        }
        for (int i = 0; i < x.b; ++i) {
            auto xm = x.sample(i);
            auto om = out.sample(i);
            for (int j = 0; j < lo; ++j) {
                int base = j * stride_;
                om.col(j) = xm.col(base);
                if (keep)
                    for (int ch = 0; ch < x.c; ++ch)
                        argmax_[(static_cast<size_t>(i) * lo + j) * x.c + ch] = base;
                for (int u = 1; u < k_; ++u) {
                    auto cand = xm.col(base + u);
                    for (int ch = 0; ch < x.c; ++ch) {
                        if (cand(ch) > om(ch, j)) {  // strict: ties keep first index
                            om(ch, j) = cand(ch);
                            if (keep)
                                argmax_[(static_cast<size_t>(i) * lo + j) * x.c + ch] = base + u;
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor3<S> backward(const Tensor3<S>& dy) {
        Tensor3<S> dx(dy.b, dy.c, in_len_);
        for (int i = 0; i < dy.b; ++i) {
            auto dym = dy.sample(i);
            auto dxm = dx.sample(i);
            for (int j = 0; j < dy.l; ++j)
                for (int ch = 0; ch < dy.c; ++ch)
                    dxm(ch, argmax_[(static_cast<size_t>(i) * dy.l + j) * dy.c + ch]) +=
                        dym(ch, j);
        }
        return dx;
    }

private:
    std::string name_;
    int k_ = 2, stride_ = 2, in_len_ = 0;
    std::vector<int> argmax_;
};

// ---- GlobalAvgPool / Linear / Softmax over 2D features ----------------------
//
// The attention head works on (features × batch) matrices; samples are columns.

template <typename S>
using Feat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
class GlobalAvgPool {
public:
    Feat<S> forward(const Tensor3<S>& x, const RunCtx& ctx) {
        Feat<S> out(x.c, x.b);
        for (int i = 0; i < x.b; ++i) out.col(i) = x.sample(i).rowwise().mean();
        if (ctx.want_backward()) { b_ = x.b; c_ = x.c; l_ = x.l; }
        return out;
    }
    Tensor3<S> backward(const Feat<S>& dy) {
        Tensor3<S> dx(b_, c_, l_);
        S inv = S(1) / static_cast<S>(l_);
        for (int i = 0; i < b_; ++i)
            dx.sample(i).colwise() = (dy.col(i) * inv).eval();
        return dx;
    }

private:
    int b_ = 0, c_ = 0, l_ = 0;
};

template <typename S>
class Linear {
public:
    Linear() = default;
    Linear(ParameterStore<S>& store, const std::string& name, int in, int out)
        : name_(name), in_(in), out_(out) {
        wid_ = store.add(name + ".w", {out, in}, Init::kaiming_uniform, in);
        bid_ = store.add(name + ".b", {out}, Init::zeros);
    }

    Feat<S> forward(ParameterStore<S>& store, const Feat<S>& x, const RunCtx& ctx) {
        if (x.rows() != in_)
            throw StructuralError(name_ + ": expected " + std::to_string(in_) +
                                  " features, got " + std::to_string(x.rows()));
        if (ctx.want_backward()) x_cache_ = x;
        using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> w(store.at(wid_).value.data(), out_, in_);
        Feat<S> y = w * x;
        y.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(
            store.at(bid_).value.data(), out_);
        return y;
    }

    Feat<S> backward(ParameterStore<S>& store, const Feat<S>& dy) {
        using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> w(store.at(wid_).value.data(), out_, in_);
        Eigen::Map<RowMat> dw(store.at(wid_).grad.data(), out_, in_);
        dw += dy * x_cache_.transpose();
        Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(store.at(bid_).grad.data(), out_) +=
            dy.rowwise().sum();
        return w.transpose() * dy;
    }

private:
    std::string name_;
    int wid_ = -1, bid_ = -1, in_ = 0, out_ = 0;
    Feat<S> x_cache_;
};

template <typename S>
class Softmax {
public:
    // softmax over rows, per column (= per sample)
    Feat<S> forward(const Feat<S>& x, const RunCtx& ctx) {
        Feat<S> y(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            auto col = x.col(j).array();
            Eigen::Array<S, Eigen::Dynamic, 1> e = (col - col.maxCoeff()).exp();
            y.col(j) = (e / e.sum()).matrix();
        }
        if (ctx.want_backward()) y_cache_ = y;
        return y;
    }
    Feat<S> backward(const Feat<S>& dy) {
        Feat<S> dx(dy.rows(), dy.cols());
        for (Eigen::Index j = 0; j < dy.cols(); ++j) {
            auto yj = y_cache_.col(j).array();
            S dot = (dy.col(j).array() * yj).sum();
            dx.col(j) = (yj * (dy.col(j).array() - dot)).matrix();
        }
        return dx;
    }

private:
    Feat<S> y_cache_;
};

// ---- Dropout -----------------------------------------------------------------
//
// Inverted dropout: kept activations scale by 1/(1-rate) in training so the
// expectation matches eval mode. The mask stream is seeded per layer.

template <typename S>
class Dropout {
public:
    Dropout() : rng_(0) {}
    Dropout(const std::string& name, double rate, uint64_t seed)
        : name_(name), rate_(rate), rng_(Rng::derive(seed, "dropout/" + name)) {
        if (rate < 0.0 || rate >= 1.0)
            throw ConfigError(name + ": dropout rate must be in [0,1), got " +
                              std::to_string(rate));
    }

    Tensor3<S> forward(const Tensor3<S>& x, const RunCtx& ctx) {
        if (!ctx.training || rate_ == 0.0) {
            mask_active_ = false;
            return x;
        }
        S scale = static_cast<S>(1.0 / (1.0 - rate_));
        mask_.resize(x.b, x.c, x.l);
        for (Eigen::Index i = 0; i < mask_.data.size(); ++i)
            mask_.data[i] = rng_.uniform() < rate_ ? S(0) : scale;
        mask_active_ = true;
        Tensor3<S> out = x;
        out.data *= mask_.data;
        return out;
    }

    Tensor3<S> backward(const Tensor3<S>& dy) {
        if (!mask_active_) return dy;
        Tensor3<S> dx = dy;
        dx.data *= mask_.data;
        return dx;
    }

private:
    std::string name_;
    double rate_ = 0.0;
    Rng rng_;
    Tensor3<S> mask_;
    bool mask_active_ = false;
};

}  // namespace tps::nn
