#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace midframe::nn {

// Single-example CHW tensor. Batches are handled as loops over examples;
// weights are shared and workers clone the layer stack when running parallel.
template <class S>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<S> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, S(0)) {}

    size_t size() const { return v.size(); }
    S& at(int ci, int y, int x) {
        return v[(static_cast<size_t>(ci) * h + y) * w + x];
    }
    S at(int ci, int y, int x) const {
        return v[(static_cast<size_t>(ci) * h + y) * w + x];
    }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <class S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.h != b.h || a.w != b.w)
        throw std::runtime_error("concat_channels: spatial dims differ");
    Tensor<S> out(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
    return out;
}

template <class S>
void split_channels(const Tensor<S>& d, int c_first, Tensor<S>& da, Tensor<S>& db) {
    da = Tensor<S>(c_first, d.h, d.w);
    db = Tensor<S>(d.c - c_first, d.h, d.w);
    std::copy(d.v.begin(), d.v.begin() + da.v.size(), da.v.begin());
    std::copy(d.v.begin() + da.v.size(), d.v.end(), db.v.begin());
}

template <class S>
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<S> v;  // values
    std::vector<S> g;  // gradient accumulator

    size_t size() const { return v.size(); }
    void setup(std::string n, std::vector<int> sh) {
        name = std::move(n);
        shape = std::move(sh);
        size_t total = 1;
        for (int d : shape) total *= static_cast<size_t>(d);
        v.assign(total, S(0));
        g.assign(total, S(0));
    }
    void zero_grad() { std::fill(g.begin(), g.end(), S(0)); }
};

enum class Act { Linear, LeakyRelu, Sigmoid };

template <class S>
inline S act_forward(Act a, S x) {
    switch (a) {
        case Act::Linear: return x;
        case Act::LeakyRelu: return x >= S(0) ? x : S(0.2) * x;
        case Act::Sigmoid: return S(1) / (S(1) + std::exp(-x));
    }
    return x;
}

template <class S>
inline S act_derivative(Act a, S pre) {
    switch (a) {
        case Act::Linear: return S(1);
        case Act::LeakyRelu: return pre >= S(0) ? S(1) : S(0.2);
        case Act::Sigmoid: {
            const S s = S(1) / (S(1) + std::exp(-pre));
            return s * (S(1) - s);
        }
    }
    return S(1);
}

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// im2col: output (c_in*k*k) x (oh*ow), zero padding.
template <class S>
void im2col(const Tensor<S>& x, int k, int stride, int pad, int oh, int ow,
            Mat<S>& cols) {
    cols.setZero(x.c * k * k, oh * ow);
    for (int ci = 0; ci < x.c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int row = (ci * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= x.h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= x.w) continue;
                        cols(row, oy * ow + ox) = x.at(ci, iy, ix);
                    }
                }
            }
}

template <class S>
void col2im(const Mat<S>& cols, int c, int h, int w, int k, int stride, int pad,
            int oh, int ow, Tensor<S>& dx) {
    dx = Tensor<S>(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int row = (ci * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        dx.at(ci, iy, ix) += cols(row, oy * ow + ox);
                    }
                }
            }
}

// Gated convolution: out = act(conv_feat(x)) * sigmoid(conv_gate(x)).
template <class S>
class GatedConv2d {
public:
    GatedConv2d() = default;
    GatedConv2d(const std::string& name, int in_c, int out_c, int k, int stride,
                Act act)
        : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(k / 2), act_(act) {
        wf_.setup(name + ".wf", {out_c, in_c, k, k});
        bf_.setup(name + ".bf", {out_c});
        wg_.setup(name + ".wg", {out_c, in_c, k, k});
        bg_.setup(name + ".bg", {out_c});
    }

    void init(std::mt19937& rng) {
        const double stddev = std::sqrt(2.0 / (in_c_ * k_ * k_));
        std::normal_distribution<double> dist(0.0, stddev);
        for (S& x : wf_.v) x = static_cast<S>(dist(rng));
        for (S& x : wg_.v) x = static_cast<S>(dist(rng));
        std::fill(bf_.v.begin(), bf_.v.end(), S(0));
        std::fill(bg_.v.begin(), bg_.v.end(), S(0));
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.c != in_c_)
            throw std::runtime_error(wf_.name + ": channel mismatch");
        x_ = x;
        oh_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
        ow_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
        Mat<S> cols;
        im2col(x, k_, stride_, pad_, oh_, ow_, cols);
        const Eigen::Map<const Mat<S>> Wf(wf_.v.data(), out_c_, in_c_ * k_ * k_);
        const Eigen::Map<const Mat<S>> Wg(wg_.v.data(), out_c_, in_c_ * k_ * k_);
        fpre_ = Wf * cols;
        gpre_ = Wg * cols;
        for (int o = 0; o < out_c_; ++o) {
            fpre_.row(o).array() += bf_.v[o];
            gpre_.row(o).array() += bg_.v[o];
        }
        Tensor<S> out(out_c_, oh_, ow_);
        Eigen::Map<Mat<S>> om(out.v.data(), out_c_, oh_ * ow_);
        for (int o = 0; o < out_c_; ++o)
            for (int j = 0; j < oh_ * ow_; ++j)
                om(o, j) = act_forward(act_, fpre_(o, j)) *
                           act_forward(Act::Sigmoid, gpre_(o, j));
        return out;
    }

    Tensor<S> backward(const Tensor<S>& dout) {
        Mat<S> dF(out_c_, oh_ * ow_), dG(out_c_, oh_ * ow_);
        const Eigen::Map<const Mat<S>> dm(dout.v.data(), out_c_, oh_ * ow_);
        for (int o = 0; o < out_c_; ++o)
            for (int j = 0; j < oh_ * ow_; ++j) {
                const S f = act_forward(act_, fpre_(o, j));
                const S g = act_forward(Act::Sigmoid, gpre_(o, j));
                dF(o, j) = dm(o, j) * g * act_derivative(act_, fpre_(o, j));
                dG(o, j) = dm(o, j) * f * act_derivative(Act::Sigmoid, gpre_(o, j));
            }
        Mat<S> cols;
        im2col(x_, k_, stride_, pad_, oh_, ow_, cols);
        Eigen::Map<Mat<S>> dWf(wf_.g.data(), out_c_, in_c_ * k_ * k_);
        Eigen::Map<Mat<S>> dWg(wg_.g.data(), out_c_, in_c_ * k_ * k_);
        dWf.noalias() += dF * cols.transpose();
        dWg.noalias() += dG * cols.transpose();
        for (int o = 0; o < out_c_; ++o) {
            bf_.g[o] += dF.row(o).sum();
            bg_.g[o] += dG.row(o).sum();
        }
        const Eigen::Map<const Mat<S>> Wf(wf_.v.data(), out_c_, in_c_ * k_ * k_);
        const Eigen::Map<const Mat<S>> Wg(wg_.v.data(), out_c_, in_c_ * k_ * k_);
        Mat<S> dcols = Wf.transpose() * dF;
        dcols.noalias() += Wg.transpose() * dG;
        Tensor<S> dx;
        col2im(dcols, in_c_, x_.h, x_.w, k_, stride_, pad_, oh_, ow_, dx);
        return dx;
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&wf_);
        out.push_back(&bf_);
        out.push_back(&wg_);
        out.push_back(&bg_);
    }

    Param<S>& gate_bias() { return bg_; }
    int out_channels() const { return out_c_; }

private:
    int in_c_ = 0, out_c_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Act act_ = Act::LeakyRelu;
    Param<S> wf_, bf_, wg_, bg_;
    // forward cache
    Tensor<S> x_;
    Mat<S> fpre_, gpre_;
    int oh_ = 0, ow_ = 0;
};

// Plain convolution, used by the frozen perceptual extractor and the learned
// flow adapter. `trainable=false` skips parameter gradients but still
// propagates gradients to the input.
template <class S>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(const std::string& name, int in_c, int out_c, int k, int stride, Act act,
           bool trainable = true)
        : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(k / 2), act_(act),
          trainable_(trainable) {
        w_.setup(name + ".w", {out_c, in_c, k, k});
        b_.setup(name + ".b", {out_c});
    }

    void init(std::mt19937& rng) {
        const double stddev = std::sqrt(2.0 / (in_c_ * k_ * k_));
        std::normal_distribution<double> dist(0.0, stddev);
        for (S& x : w_.v) x = static_cast<S>(dist(rng));
        std::fill(b_.v.begin(), b_.v.end(), S(0));
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.c != in_c_) throw std::runtime_error(w_.name + ": channel mismatch");
        x_ = x;
        oh_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
        ow_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
        Mat<S> cols;
        im2col(x, k_, stride_, pad_, oh_, ow_, cols);
        const Eigen::Map<const Mat<S>> W(w_.v.data(), out_c_, in_c_ * k_ * k_);
        pre_ = W * cols;
        for (int o = 0; o < out_c_; ++o) pre_.row(o).array() += b_.v[o];
        Tensor<S> out(out_c_, oh_, ow_);
        Eigen::Map<Mat<S>> om(out.v.data(), out_c_, oh_ * ow_);
        for (int o = 0; o < out_c_; ++o)
            for (int j = 0; j < oh_ * ow_; ++j)
                om(o, j) = act_forward(act_, pre_(o, j));
        return out;
    }

    Tensor<S> backward(const Tensor<S>& dout) {
        Mat<S> dP(out_c_, oh_ * ow_);
        const Eigen::Map<const Mat<S>> dm(dout.v.data(), out_c_, oh_ * ow_);
        for (int o = 0; o < out_c_; ++o)
            for (int j = 0; j < oh_ * ow_; ++j)
                dP(o, j) = dm(o, j) * act_derivative(act_, pre_(o, j));
        if (trainable_) {
            Mat<S> cols;
            im2col(x_, k_, stride_, pad_, oh_, ow_, cols);
            Eigen::Map<Mat<S>> dW(w_.g.data(), out_c_, in_c_ * k_ * k_);
            dW.noalias() += dP * cols.transpose();
            for (int o = 0; o < out_c_; ++o) b_.g[o] += dP.row(o).sum();
        }
        const Eigen::Map<const Mat<S>> W(w_.v.data(), out_c_, in_c_ * k_ * k_);
        const Mat<S> dcols = W.transpose() * dP;
        Tensor<S> dx;
        col2im(dcols, in_c_, x_.h, x_.w, k_, stride_, pad_, oh_, ow_, dx);
        return dx;
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&w_);
        out.push_back(&b_);
    }

private:
    int in_c_ = 0, out_c_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Act act_ = Act::LeakyRelu;
    bool trainable_ = true;
    Param<S> w_, b_;
    Tensor<S> x_;
    Mat<S> pre_;
    int oh_ = 0, ow_ = 0;
};

// Nearest-neighbor 2x upsampling; backward sums each 2x2 block.
template <class S>
class Upsample2x {
public:
    Tensor<S> forward(const Tensor<S>& x) {
        in_h_ = x.h;
        in_w_ = x.w;
        Tensor<S> out(x.c, 2 * x.h, 2 * x.w);
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int xw = 0; xw < out.w; ++xw)
                    out.at(c, y, xw) = x.at(c, y / 2, xw / 2);
        return out;
    }
    Tensor<S> backward(const Tensor<S>& dout) {
        Tensor<S> dx(dout.c, in_h_, in_w_);
        for (int c = 0; c < dout.c; ++c)
            for (int y = 0; y < dout.h; ++y)
                for (int xw = 0; xw < dout.w; ++xw)
                    dx.at(c, y / 2, xw / 2) += dout.at(c, y, xw);
        return dx;
    }

private:
    int in_h_ = 0, in_w_ = 0;
};

}  // namespace midframe::nn
