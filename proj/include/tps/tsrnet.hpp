#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tps/nn/layers.hpp"
#include "tps/nn/store.hpp"

namespace tps {

// Channel plan for the reconstruction net. `base` is the stem width; `enc`
// lists the four encoder output widths; `neck` is the bottleneck width. The
// defaults land the trainable parameter count at 1,814,989.
struct TsrNetConfig {
    int window = 256;
    int base = 32;
    std::vector<int> enc = {64, 128, 160, 192};
    int neck = 512;
    double dropout = 0.1;

    void validate() const {
        if (window < 32 || window % 32)
            throw ConfigError("model.window must be a positive multiple of 32, got " +
                              std::to_string(window));
        if (base < 4 || base % 4)
            throw ConfigError("model.base must be a multiple of 4, got " +
                              std::to_string(base));
        if (enc.size() != 4)
            throw ConfigError("model.enc must list exactly 4 widths, got " +
                              std::to_string(enc.size()));
        for (int c : enc)
            if (c < 4 || c % 4)
                throw ConfigError("encoder widths must be multiples of 4, got " +
                                  std::to_string(c));
        if (neck < 1) throw ConfigError("model.neck must be positive");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("model.dropout must be in [0,1)");
    }
};

namespace nn {

// Intermediates of one attention pass, captured on request for inspection.
template <typename S>
struct AttentionState {
    Tensor3<S> f[3];   // per-scale branch outputs
    Feat<S> z;         // pooled descriptor, C x B
    Feat<S> w;         // branch weights, 3 x B, rows of each column sum to 1
    Tensor3<S> fused;  // convex combination of the branches
    Tensor3<S> a;      // gate mask in (0,1)
};

// Multi-scale depthwise attention. Three depthwise branches at widening
// kernels, a squeeze head that softmax-weights the branches per sample, and a
// two-layer depthwise gate that turns the fused map into a mask on the input.
template <typename S>
class DmsAttention {
public:
    DmsAttention() = default;
    DmsAttention(ParameterStore<S>& store, const std::string& name, int c)
        : name_(name), c_(c),
          dw5_(store, name + ".dw5", c, c, 5, 1, 2, c),
          dw11_(store, name + ".dw11", c, c, 11, 1, 5, c),
          dw21_(store, name + ".dw21", c, c, 21, 1, 10, c),
          fc1_(store, name + ".fc1", c, c / 4),
          fc2_(store, name + ".fc2", c / 4, 3),
          att1_(store, name + ".att1", c, c, 3, 1, 1, c),
          att2_(store, name + ".att2", c, c, 3, 1, 1, c) {}

    // Test hook: >= 0 pins the branch weights to a one-hot instead of the
    // learned softmax. Forward only; never used while training.
    void force_branch(int idx) { forced_ = idx; }

    // Non-null sink records the pass intermediates (inspection hook).
    void capture(AttentionState<S>* sink) { sink_ = sink; }

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> f5 = dw5_.forward(store, x, ctx);
        Tensor3<S> f11 = dw11_.forward(store, x, ctx);
        Tensor3<S> f21 = dw21_.forward(store, x, ctx);

        Feat<S> z = gap_.forward(x, ctx);
        Feat<S> h = fc1_.forward(store, z, ctx);
        h_sig_ = (S(1) / (S(1) + (-h.array()).exp())).matrix();
        Feat<S> w = softmax_.forward(fc2_.forward(store, h_sig_, ctx), ctx);
        if (forced_ >= 0) {
            if (forced_ > 2)
                throw RangeError(name_ + ": branch index out of range");
            w.setZero();
            w.row(forced_).setOnes();
        }

        Tensor3<S> fused(x.b, c_, x.l);
        for (int i = 0; i < x.b; ++i)
            fused.sample(i) = w(0, i) * f5.sample(i) + w(1, i) * f11.sample(i) +
                              w(2, i) * f21.sample(i);

        Tensor3<S> s1 = relu_.forward(att1_.forward(store, fused, ctx), ctx);
        Tensor3<S> a = gate_.forward(att2_.forward(store, s1, ctx), ctx);
        Tensor3<S> out = hadamard(x, a);
        if (sink_) {
            sink_->f[0] = f5;
            sink_->f[1] = f11;
            sink_->f[2] = f21;
            sink_->z = z;
            sink_->w = w;
            sink_->fused = fused;
            sink_->a = a;
        }
        if (ctx.want_backward()) {
            x_cache_ = x;
            a_cache_ = a;
            f5_ = std::move(f5);
            f11_ = std::move(f11);
            f21_ = std::move(f21);
            w_cache_ = w;
        }
        check_finite(out, name_, ctx);
        return out;
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        // mask path
        Tensor3<S> da = hadamard(dy, x_cache_);
        Tensor3<S> dx = hadamard(dy, a_cache_);

        Tensor3<S> ds1 = relu_.backward(att2_.backward(store, gate_.backward(da), ctx));
        Tensor3<S> dfused = att1_.backward(store, ds1, ctx);

        // branch split; the squeeze head picks up <F_i, dF> per sample unless pinned
        Tensor3<S> d5(dfused.b, c_, dfused.l), d11(dfused.b, c_, dfused.l),
            d21(dfused.b, c_, dfused.l);
        Feat<S> dw = Feat<S>::Zero(3, dfused.b);
        for (int i = 0; i < dfused.b; ++i) {
            auto dm = dfused.sample(i);
            d5.sample(i) = w_cache_(0, i) * dm;
            d11.sample(i) = w_cache_(1, i) * dm;
            d21.sample(i) = w_cache_(2, i) * dm;
            if (forced_ < 0) {
                dw(0, i) = (dm.array() * f5_.sample(i).array()).sum();
                dw(1, i) = (dm.array() * f11_.sample(i).array()).sum();
                dw(2, i) = (dm.array() * f21_.sample(i).array()).sum();
            }
        }
        if (forced_ < 0) {
            Feat<S> dh = fc2_.backward(store, softmax_.backward(dw));
            dh.array() *= h_sig_.array() * (S(1) - h_sig_.array());
            dx.data += gap_.backward(fc1_.backward(store, dh)).data;
        }
        dx.data += dw5_.backward(store, d5, ctx).data;
        dx.data += dw11_.backward(store, d11, ctx).data;
        dx.data += dw21_.backward(store, d21, ctx).data;
        return dx;
    }

private:
    std::string name_;
    int c_ = 0;
    int forced_ = -1;
    AttentionState<S>* sink_ = nullptr;
    Conv1d<S> dw5_, dw11_, dw21_;
    Linear<S> fc1_, fc2_;
    Conv1d<S> att1_, att2_;
    GlobalAvgPool<S> gap_;
    Softmax<S> softmax_;
    ReLU<S> relu_;
    Sigmoid<S> gate_;
    Feat<S> h_sig_, w_cache_;
    Tensor3<S> x_cache_, a_cache_, f5_, f11_, f21_;
};

// Stem: wide-kernel lift to base/2, halve the length, project to base.
template <typename S>
class PreBlock {
public:
    PreBlock() = default;
    PreBlock(ParameterStore<S>& store, const std::string& name, int base,
             double dropout, uint64_t seed)
        : conv1_(store, name + ".conv1", 1, base / 2, 7, 1, 3),
          bn1_(store, name + ".bn1", base / 2),
          pool_(name + ".pool", 2, 2),
          conv2_(store, name + ".conv2", base / 2, base, 3, 1, 1),
          drop_(name + ".drop", dropout, seed) {}

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> t =
            relu_.forward(bn1_.forward(store, conv1_.forward(store, x, ctx), ctx), ctx);
        t = pool_.forward(t, ctx);
        t = conv2_.forward(store, t, ctx);
        return drop_.forward(t, ctx);
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        Tensor3<S> d = conv2_.backward(store, drop_.backward(dy), ctx);
        d = pool_.backward(d);
        return conv1_.backward(store, bn1_.backward(store, relu_.backward(d), ctx), ctx);
    }

private:
    Conv1d<S> conv1_;
    BatchNorm1d<S> bn1_;
    MaxPool1d<S> pool_;
    Conv1d<S> conv2_;
    Dropout<S> drop_;
    ReLU<S> relu_;
};

// Two refinement convs, a 1x1 merge with the block input, then a strided
// projection to the next width and attention.
template <typename S>
class EncoderBlock {
public:
    EncoderBlock() = default;
    EncoderBlock(ParameterStore<S>& store, const std::string& name, int cin, int cout,
                 double dropout, uint64_t seed)
        : cin_(cin),
          conv_a_(store, name + ".conv_a", cin, cin, 3, 1, 1),
          bn_a_(store, name + ".bn_a", cin),
          conv_b_(store, name + ".conv_b", cin, cin, 3, 1, 1),
          bn_b_(store, name + ".bn_b", cin),
          fuse_(store, name + ".fuse", 2 * cin, cin, 1),
          down_(store, name + ".down", cin, cout, 3, 2, 1),
          bn_d_(store, name + ".bn_d", cout),
          drop_(name + ".drop", dropout, seed),
          refine_(store, name + ".refine", cout, cout, 3, 1, 1),
          att_(store, name + ".att", cout) {}

    DmsAttention<S>& attention() { return att_; }

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> a =
            relu_a_.forward(bn_a_.forward(store, conv_a_.forward(store, x, ctx), ctx), ctx);
        Tensor3<S> b =
            relu_b_.forward(bn_b_.forward(store, conv_b_.forward(store, a, ctx), ctx), ctx);
        Tensor3<S> f = relu_f_.forward(fuse_.forward(store, concat_channels(x, b), ctx), ctx);
        Tensor3<S> d =
            relu_d_.forward(bn_d_.forward(store, down_.forward(store, f, ctx), ctx), ctx);
        d = drop_.forward(d, ctx);
        return att_.forward(store, refine_.forward(store, d, ctx), ctx);
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        Tensor3<S> d = refine_.backward(store, att_.backward(store, dy, ctx), ctx);
        d = drop_.backward(d);
        d = down_.backward(store, bn_d_.backward(store, relu_d_.backward(d), ctx), ctx);
        Tensor3<S> dcat = fuse_.backward(store, relu_f_.backward(d), ctx);
        Tensor3<S> dx, db;
        split_channels(dcat, dx, db, cin_);
        Tensor3<S> da =
            conv_b_.backward(store, bn_b_.backward(store, relu_b_.backward(db), ctx), ctx);
        dx.data +=
            conv_a_.backward(store, bn_a_.backward(store, relu_a_.backward(da), ctx), ctx).data;
        return dx;
    }

private:
    int cin_ = 0;
    Conv1d<S> conv_a_;
    BatchNorm1d<S> bn_a_;
    Conv1d<S> conv_b_;
    BatchNorm1d<S> bn_b_;
    Conv1d<S> fuse_;
    Conv1d<S> down_;
    BatchNorm1d<S> bn_d_;
    Dropout<S> drop_;
    Conv1d<S> refine_;
    DmsAttention<S> att_;
    ReLU<S> relu_a_, relu_b_, relu_f_, relu_d_;
};

// Upsample, merge the skip, refine twice.
template <typename S>
class DecoderBlock {
public:
    DecoderBlock() = default;
    DecoderBlock(ParameterStore<S>& store, const std::string& name, int cin, int cout,
                 int cskip, double dropout, uint64_t seed)
        : cout_(cout),
          up_(store, name + ".up", cin, cout, 2, 2, 0),
          conv1_(store, name + ".conv1", cout + cskip, cout, 3, 1, 1),
          bn1_(store, name + ".bn1", cout),
          conv2_(store, name + ".conv2", cout, cout, 3, 1, 1),
          bn2_(store, name + ".bn2", cout),
          drop_(name + ".drop", dropout, seed) {}

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x,
                       const Tensor3<S>& skip, const RunCtx& ctx) {
        Tensor3<S> u = up_.forward(store, x, ctx);
        if (u.l != skip.l)
            throw StructuralError("decoder: upsample length " + std::to_string(u.l) +
                                  " does not match skip length " + std::to_string(skip.l));
        Tensor3<S> t = relu1_.forward(
            bn1_.forward(store, conv1_.forward(store, concat_channels(u, skip), ctx), ctx),
            ctx);
        t = relu2_.forward(bn2_.forward(store, conv2_.forward(store, t, ctx), ctx), ctx);
        return drop_.forward(t, ctx);
    }

    // returns d(input); d(skip) lands in dskip
    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy,
                        Tensor3<S>& dskip, const RunCtx& ctx) {
        Tensor3<S> d = drop_.backward(dy);
        d = conv2_.backward(store, bn2_.backward(store, relu2_.backward(d), ctx), ctx);
        Tensor3<S> dcat =
            conv1_.backward(store, bn1_.backward(store, relu1_.backward(d), ctx), ctx);
        Tensor3<S> du;
        split_channels(dcat, du, dskip, cout_);
        return up_.backward(store, du, ctx);
    }

private:
    int cout_ = 0;
    ConvTranspose1d<S> up_;
    Conv1d<S> conv1_;
    BatchNorm1d<S> bn1_;
    Conv1d<S> conv2_;
    BatchNorm1d<S> bn2_;
    Dropout<S> drop_;
    ReLU<S> relu1_, relu2_;
};

// Restore full length and squash to a [0,1] response per step.
template <typename S>
class PostBlock {
public:
    PostBlock() = default;
    PostBlock(ParameterStore<S>& store, const std::string& name, int base)
        : up_(store, name + ".up", base, base, 2, 2, 0),
          conv1_(store, name + ".conv1", base, base / 2, 3, 1, 1),
          conv2_(store, name + ".conv2", base / 2, 1, 3, 1, 1) {}

    Tensor3<S> forward(ParameterStore<S>& store, const Tensor3<S>& x, const RunCtx& ctx) {
        Tensor3<S> t = relu_.forward(conv1_.forward(store, up_.forward(store, x, ctx), ctx), ctx);
        return sig_.forward(conv2_.forward(store, t, ctx), ctx);
    }

    Tensor3<S> backward(ParameterStore<S>& store, const Tensor3<S>& dy, const RunCtx& ctx) {
        Tensor3<S> d = conv2_.backward(store, sig_.backward(dy), ctx);
        return up_.backward(store, conv1_.backward(store, relu_.backward(d), ctx), ctx);
    }

private:
    ConvTranspose1d<S> up_;
    Conv1d<S> conv1_;
    Conv1d<S> conv2_;
    ReLU<S> relu_;
    Sigmoid<S> sig_;
};

}  // namespace nn

// Encoder-decoder over single-channel temporal windows. Input (B, 1, L) with
// L a positive multiple of 32; output (B, 1, L) in [0,1]. The stem halves the
// length once, each encoder stage halves it again, the decoder mirrors that,
// so 32 divides L exactly or the skip lengths stop matching.
template <typename S>
class TsrNet {
public:
    explicit TsrNet(const TsrNetConfig& cfg = {}, uint64_t seed = 0) : cfg_(cfg) {
        cfg_.validate();
        pre_ = nn::PreBlock<S>(store, "pre", cfg_.base, cfg_.dropout, seed);
        int w = cfg_.base;
        for (int i = 0; i < 4; ++i) {
            enc_[i] = nn::EncoderBlock<S>(store, "enc" + std::to_string(i + 1), w,
                                          cfg_.enc[i], cfg_.dropout, seed);
            w = cfg_.enc[i];
        }
        neck_ = nn::Conv1d<S>(store, "neck.conv", cfg_.enc[3], cfg_.neck, 3, 1, 1);
        int dc = cfg_.neck;
        const int skips[4] = {cfg_.enc[2], cfg_.enc[1], cfg_.enc[0], cfg_.base};
        for (int i = 0; i < 4; ++i) {
            dec_[i] = nn::DecoderBlock<S>(store, "dec" + std::to_string(i + 1), dc,
                                          skips[i], skips[i], cfg_.dropout, seed);
            dc = skips[i];
        }
        post_ = nn::PostBlock<S>(store, "post", cfg_.base);
    }

    const TsrNetConfig& config() const { return cfg_; }

    void init(uint64_t seed) { store.init_params(seed); }

    int64_t parameter_count() const {
        int64_t n = 0;
        for (const auto& p : store)
            if (p.trainable) n += p.value.size();
        return n;
    }

    static void validate_length(int l) {
        if (l < 32 || l % 32)
            throw StructuralError("window length must be a positive multiple of 32, got " +
                                  std::to_string(l));
    }

    Tensor3<S> forward(const Tensor3<S>& x, const nn::RunCtx& ctx) {
        if (x.c != 1)
            throw StructuralError("expected single-channel input, got " + x.shape_str());
        if (x.l != cfg_.window)
            throw StructuralError("input length " + std::to_string(x.l) +
                                  " does not match configured window " +
                                  std::to_string(cfg_.window));
        p_ = pre_.forward(store, x, ctx);
        e_[0] = enc_[0].forward(store, p_, ctx);
        e_[1] = enc_[1].forward(store, e_[0], ctx);
        e_[2] = enc_[2].forward(store, e_[1], ctx);
        e_[3] = enc_[3].forward(store, e_[2], ctx);
        Tensor3<S> n = relu_n_.forward(neck_.forward(store, e_[3], ctx), ctx);
        Tensor3<S> d = dec_[0].forward(store, n, e_[2], ctx);
        d = dec_[1].forward(store, d, e_[1], ctx);
        d = dec_[2].forward(store, d, e_[0], ctx);
        d = dec_[3].forward(store, d, p_, ctx);
        return post_.forward(store, d, ctx);
    }

    // dy has the output's shape; returns d(input)
    Tensor3<S> backward(const Tensor3<S>& dy, const nn::RunCtx& ctx) {
        Tensor3<S> d = post_.backward(store, dy, ctx);
        Tensor3<S> dskip_p, dskip0, dskip1, dskip2;
        d = dec_[3].backward(store, d, dskip_p, ctx);
        d = dec_[2].backward(store, d, dskip0, ctx);
        d = dec_[1].backward(store, d, dskip1, ctx);
        Tensor3<S> dn = dec_[0].backward(store, d, dskip2, ctx);
        Tensor3<S> de3 = neck_.backward(store, relu_n_.backward(dn), ctx);
        Tensor3<S> de2 = enc_[3].backward(store, de3, ctx);
        de2.data += dskip2.data;
        Tensor3<S> de1 = enc_[2].backward(store, de2, ctx);
        de1.data += dskip1.data;
        Tensor3<S> de0 = enc_[1].backward(store, de1, ctx);
        de0.data += dskip0.data;
        Tensor3<S> dp = enc_[0].backward(store, de0, ctx);
        dp.data += dskip_p.data;
        return pre_.backward(store, dp, ctx);
    }

    // Pins every attention block to one branch (0..2), or -1 to unpin.
    void force_attention_branch(int idx) {
        for (auto& e : enc_) e.attention().force_branch(idx);
    }

    nn::DmsAttention<S>& attention(int stage) {
        if (stage < 0 || stage > 3) throw RangeError("encoder stage out of range");
        return enc_[stage].attention();
    }

    nn::ParameterStore<S> store;

private:
    TsrNetConfig cfg_;
    nn::PreBlock<S> pre_;
    nn::EncoderBlock<S> enc_[4];
    nn::DecoderBlock<S> dec_[4];
    nn::Conv1d<S> neck_;
    nn::ReLU<S> relu_n_;
    nn::PostBlock<S> post_;
    Tensor3<S> p_, e_[4];
};

using TsrNetF = TsrNet<float>;
using TsrNetD = TsrNet<double>;

}  // namespace tps
