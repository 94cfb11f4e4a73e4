#pragma once

#include "midframe/core.hpp"
#include "midframe/nn.hpp"

namespace midframe {

// Fuses the two halfway-warped frames into the intermediate frame. Three
// resolution levels, hidden width 32, three skip connections, all layers
// gated convolutions. By default the two validity masks are appended as
// extra input channels; include_masks=false restores the 6-channel input.
template <class S>
class UNetFusion {
public:
    static constexpr int kWidth = 32;

    explicit UNetFusion(bool include_masks = true)
        : include_masks_(include_masks), in_c_(include_masks ? 8 : 6) {
        using nn::Act;
        in0_ = {"unet.in0", in_c_, kWidth, 3, 1, Act::LeakyRelu};
        in1_ = {"unet.in1", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        d1_ = {"unet.d1", kWidth, kWidth, 3, 2, Act::LeakyRelu};
        e1_ = {"unet.e1", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        d2_ = {"unet.d2", kWidth, kWidth, 3, 2, Act::LeakyRelu};
        e2_ = {"unet.e2", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        b1_ = {"unet.b1", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        b2_ = {"unet.b2", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        m2a_ = {"unet.m2a", 2 * kWidth, kWidth, 3, 1, Act::LeakyRelu};
        m2b_ = {"unet.m2b", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        u1_ = {"unet.u1", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        m1a_ = {"unet.m1a", 2 * kWidth, kWidth, 3, 1, Act::LeakyRelu};
        u0_ = {"unet.u0", kWidth, kWidth, 3, 1, Act::LeakyRelu};
        m0a_ = {"unet.m0a", 2 * kWidth, kWidth, 3, 1, Act::LeakyRelu};
        out_ = {"unet.out", kWidth, 3, 3, 1, Act::Sigmoid};
    }

    void init(std::mt19937& rng) {
        for (auto* l : layers()) l->init(rng);
    }

    bool include_masks() const { return include_masks_; }
    int in_channels() const { return in_c_; }

    // Input must have H, W divisible by 4 (callers pad otherwise).
    nn::Tensor<S> forward(const nn::Tensor<S>& x) {
        if (x.h % 4 != 0 || x.w % 4 != 0)
            throw std::runtime_error("UNetFusion: H and W must be divisible by 4");
        auto s0 = in1_.forward(in0_.forward(x));
        auto s1 = e1_.forward(d1_.forward(s0));
        auto s2 = e2_.forward(d2_.forward(s1));
        auto t = b2_.forward(b1_.forward(s2));
        t = m2b_.forward(m2a_.forward(nn::concat_channels(t, s2)));
        t = u1_.forward(up1_.forward(t));
        t = m1a_.forward(nn::concat_channels(t, s1));
        t = u0_.forward(up0_.forward(t));
        t = m0a_.forward(nn::concat_channels(t, s0));
        return out_.forward(t);
    }

    nn::Tensor<S> backward(const nn::Tensor<S>& dy) {
        auto dt = out_.backward(dy);
        nn::Tensor<S> da, ds0_cat, ds1_cat, ds2_cat;
        nn::split_channels(m0a_.backward(dt), kWidth, da, ds0_cat);
        dt = up0_.backward(u0_.backward(da));
        nn::split_channels(m1a_.backward(dt), kWidth, da, ds1_cat);
        dt = up1_.backward(u1_.backward(da));
        nn::split_channels(m2a_.backward(m2b_.backward(dt)), kWidth, da, ds2_cat);
        auto ds2 = b1_.backward(b2_.backward(da));
        for (size_t i = 0; i < ds2.v.size(); ++i) ds2.v[i] += ds2_cat.v[i];
        auto ds1 = d2_.backward(e2_.backward(ds2));
        for (size_t i = 0; i < ds1.v.size(); ++i) ds1.v[i] += ds1_cat.v[i];
        auto ds0 = d1_.backward(e1_.backward(ds1));
        for (size_t i = 0; i < ds0.v.size(); ++i) ds0.v[i] += ds0_cat.v[i];
        return in0_.backward(in1_.backward(ds0));
    }

    std::vector<nn::Param<S>*> parameters() {
        std::vector<nn::Param<S>*> out;
        for (auto* l : layers()) l->collect(out);
        return out;
    }

    std::vector<nn::GatedConv2d<S>*> layers() {
        return {&in0_, &in1_, &d1_, &e1_, &d2_, &e2_, &b1_, &b2_,
                &m2a_, &m2b_, &u1_, &m1a_, &u0_, &m0a_, &out_};
    }

private:
    bool include_masks_ = true;
    int in_c_ = 8;
    nn::GatedConv2d<S> in0_, in1_, d1_, e1_, d2_, e2_, b1_, b2_;
    nn::GatedConv2d<S> m2a_, m2b_, u1_, m1a_, u0_, m0a_, out_;
    nn::Upsample2x<S> up1_, up0_;
};

// Restores fine detail: concat(f_int, f_tilde) through five additive residual
// blocks of 1x1 gated convolutions at width 32. The head predicts a
// correction added onto f_tilde, so the network only has to repair holes and
// residual misalignment rather than regenerate the frame.
template <class S>
class ResNetRefine {
public:
    static constexpr int kWidth = 32;
    static constexpr int kBlocks = 5;

    ResNetRefine() {
        using nn::Act;
        rin_ = {"resnet.in", 6, kWidth, 3, 1, Act::LeakyRelu};
        for (int i = 0; i < kBlocks; ++i) {
            const std::string base = "resnet.block" + std::to_string(i);
            block_a_[i] = {base + ".a", kWidth, kWidth, 1, 1, Act::LeakyRelu};
            block_b_[i] = {base + ".b", kWidth, kWidth, 1, 1, Act::Linear};
        }
        rout_ = {"resnet.out", kWidth, 3, 3, 1, Act::Linear};
    }

    void init(std::mt19937& rng) {
        for (auto* l : layers()) l->init(rng);
    }

    nn::Tensor<S> forward(const nn::Tensor<S>& x) {
        auto t = rin_.forward(x);
        for (int i = 0; i < kBlocks; ++i) {
            auto r = block_b_[i].forward(block_a_[i].forward(t));
            for (size_t j = 0; j < t.v.size(); ++j) t.v[j] += r.v[j];
        }
        auto y = rout_.forward(t);
        // global skip from the f_tilde half of the input
        for (int c = 0; c < y.c; ++c)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx) y.at(c, yy, xx) += x.at(c + 3, yy, xx);
        return y;
    }

    nn::Tensor<S> backward(const nn::Tensor<S>& dy) {
        auto dt = rout_.backward(dy);
        for (int i = kBlocks - 1; i >= 0; --i) {
            auto dr = block_a_[i].backward(block_b_[i].backward(dt));
            for (size_t j = 0; j < dt.v.size(); ++j) dt.v[j] += dr.v[j];
        }
        auto dx = rin_.backward(dt);
        for (int c = 0; c < dy.c; ++c)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) dx.at(c + 3, yy, xx) += dy.at(c, yy, xx);
        return dx;
    }

    std::vector<nn::Param<S>*> parameters() {
        std::vector<nn::Param<S>*> out;
        for (auto* l : layers()) l->collect(out);
        return out;
    }

    std::vector<nn::GatedConv2d<S>*> layers() {
        std::vector<nn::GatedConv2d<S>*> out{&rin_};
        for (int i = 0; i < kBlocks; ++i) {
            out.push_back(&block_a_[i]);
            out.push_back(&block_b_[i]);
        }
        out.push_back(&rout_);
        return out;
    }

private:
    nn::GatedConv2d<S> rin_, rout_;
    nn::GatedConv2d<S> block_a_[kBlocks], block_b_[kBlocks];
};

template <class S>
struct NetPair {
    UNetFusion<S> unet;
    ResNetRefine<S> resnet;
    uint64_t step = 0;

    explicit NetPair(bool include_masks = true) : unet(include_masks) {}

    void init(uint64_t seed) {
        std::mt19937 rng(static_cast<uint32_t>(seed));
        unet.init(rng);
        resnet.init(rng);
        step = 0;
    }

    std::vector<nn::Param<S>*> parameters() {
        auto p = unet.parameters();
        auto q = resnet.parameters();
        p.insert(p.end(), q.begin(), q.end());
        return p;
    }
};

// ---- frame <-> tensor helpers ----

template <class S>
nn::Tensor<S> frame_to_tensor(const Frame& f) {
    nn::Tensor<S> t(f.channels, f.height, f.width);
    for (size_t i = 0; i < f.data.size(); ++i) t.v[i] = static_cast<S>(f.data[i]);
    return t;
}

template <class S>
Frame tensor_to_frame(const nn::Tensor<S>& t) {
    Frame f(t.h, t.w, t.c);
    for (size_t i = 0; i < t.v.size(); ++i) f.data[i] = static_cast<float>(t.v[i]);
    return f;
}

template <class S>
nn::Tensor<S> mask_to_tensor(const ValidityMask& m) {
    nn::Tensor<S> t(1, m.height, m.width);
    for (size_t i = 0; i < m.valid.size(); ++i) t.v[i] = m.valid[i] ? S(1) : S(0);
    return t;
}

// Reflect-pads H and W up to the next multiple of 4.
template <class S>
nn::Tensor<S> reflect_pad_to_multiple4(const nn::Tensor<S>& x, int& pad_h, int& pad_w) {
    pad_h = (4 - x.h % 4) % 4;
    pad_w = (4 - x.w % 4) % 4;
    if (pad_h == 0 && pad_w == 0) return x;
    nn::Tensor<S> out(x.c, x.h + pad_h, x.w + pad_w);
    for (int c = 0; c < x.c; ++c)
        for (int y = 0; y < out.h; ++y) {
            const int sy = y < x.h ? y : 2 * x.h - 2 - y;
            for (int xx = 0; xx < out.w; ++xx) {
                const int sx = xx < x.w ? xx : 2 * x.w - 2 - xx;
                out.at(c, y, xx) = x.at(c, sy, sx);
            }
        }
    return out;
}

template <class S>
nn::Tensor<S> crop_to(const nn::Tensor<S>& x, int h, int w) {
    if (x.h == h && x.w == w) return x;
    nn::Tensor<S> out(x.c, h, w);
    for (int c = 0; c < x.c; ++c)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) = x.at(c, y, xx);
    return out;
}

// Forward pass through the U-Net at the module boundary: assembles the input
// tensor, pads to a multiple of 4, crops back and clamps to [0,1].
template <class S>
Frame unet_forward(UNetFusion<S>& net, const Frame& f_w_minus, const Frame& f_w_plus,
                   const ValidityMask& mask_minus, const ValidityMask& mask_plus) {
    if (!f_w_minus.same_shape(f_w_plus))
        throw std::runtime_error("unet_forward: input dimension mismatch");
    auto x = nn::concat_channels(frame_to_tensor<S>(f_w_minus),
                                 frame_to_tensor<S>(f_w_plus));
    if (net.include_masks()) {
        x = nn::concat_channels(x, mask_to_tensor<S>(mask_minus));
        x = nn::concat_channels(x, mask_to_tensor<S>(mask_plus));
    }
    int ph, pw;
    auto padded = reflect_pad_to_multiple4(x, ph, pw);
    auto y = net.forward(padded);
    Frame out = tensor_to_frame(crop_to(y, f_w_minus.height, f_w_minus.width));
    if (!out.all_finite())
        throw std::runtime_error("unet_forward: non-finite activations");
    out.clamp01();
    return out;
}

template <class S>
Frame resnet_forward(ResNetRefine<S>& net, const Frame& f_int, const Frame& f_tilde) {
    if (!f_int.same_shape(f_tilde))
        throw std::runtime_error("resnet_forward: input dimension mismatch");
    auto x = nn::concat_channels(frame_to_tensor<S>(f_int), frame_to_tensor<S>(f_tilde));
    auto y = net.forward(x);
    Frame out = tensor_to_frame(y);
    if (!out.all_finite())
        throw std::runtime_error("resnet_forward: non-finite activations");
    out.clamp01();
    return out;
}

}  // namespace midframe
