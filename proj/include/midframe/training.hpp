#pragma once

#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "midframe/flow.hpp"
#include "midframe/nets.hpp"
#include "midframe/perceptual.hpp"

namespace midframe {

struct TrainingConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 16;
    int patch_size = 256;
    int epochs = 200;
    int decay_start_epoch = 100;
    double max_translation_fraction = 1.0 / 8.0;
    bool augment_flips = true;
    bool include_masks = true;
    uint64_t seed = 1;

    void validate() const {
        if (max_translation_fraction <= 0.0 || max_translation_fraction >= 0.5)
            throw std::runtime_error("TrainingConfig: max_translation_fraction out of (0, 1/2)");
        if (decay_start_epoch >= epochs)
            throw std::runtime_error("TrainingConfig: decay start must precede epochs");
        if (batch_size < 1) throw std::runtime_error("TrainingConfig: batch_size < 1");
    }
};

// Linear decay from decay_start_epoch to zero at `epochs`.
inline double lr_at(const TrainingConfig& cfg, double epoch) {
    if (epoch < cfg.decay_start_epoch) return cfg.learning_rate;
    const double span = cfg.epochs - cfg.decay_start_epoch;
    const double f = 1.0 - (epoch - cfg.decay_start_epoch) / span;
    return cfg.learning_rate * std::max(0.0, f);
}

struct LossReport {
    double l1_out = 0, perceptual_out = 0, l1_int = 0, perceptual_int = 0;
    double total = 0;
};

struct PseudoGt {
    Frame f_s;
    double tx = 0, ty = 0;
    ValidityMask mask;
};

// Deterministic core: translate content by (tx, ty).
inline PseudoGt make_pseudo_gt_with(const Frame& f_i, double tx, double ty) {
    PseudoGt out;
    out.tx = tx;
    out.ty = ty;
    out.f_s = Frame(f_i.height, f_i.width, f_i.channels);
    out.mask = ValidityMask(f_i.height, f_i.width, true);
    for (int y = 0; y < f_i.height; ++y)
        for (int x = 0; x < f_i.width; ++x) {
            bool ok = true;
            for (int c = 0; c < f_i.channels; ++c) {
                float v;
                ok = f_i.sample(c, x - tx, y - ty, v);
                out.f_s.at(c, y, x) = v;
            }
            out.mask.at(y, x) = ok ? 1 : 0;
        }
    if (f_i.pose)
        out.f_s.pose = f_i.pose->compose(Affine2::translation(-tx, -ty));
    return out;
}

// Pseudo-ground truth: f_i translated by a random vector of magnitude at most
// max_fraction * width, direction uniform. Out-of-frame region is zero-filled.
inline PseudoGt make_pseudo_gt(const Frame& f_i, std::mt19937& rng,
                               double max_fraction = 1.0 / 8.0) {
    if (f_i.width < 16) throw std::runtime_error("make_pseudo_gt: frame width < 16");
    std::uniform_real_distribution<double> mag(0.0, max_fraction * f_i.width);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    const double r = mag(rng);
    const double a = ang(rng);
    return make_pseudo_gt_with(f_i, r * std::cos(a), r * std::sin(a));
}

struct TrainingExample {
    Frame f_w_minus, f_w_plus;
    ValidityMask mask_minus, mask_plus;
    Frame f_i;
    Frame f_s;
    Frame f_tilde;       // original warped toward the reconstruction target
    ValidityMask mask_tilde;
};

// Prepares one training example from a consecutive triplet: the neighbors are
// fully warped (scale 1) toward the pseudo-ground truth so the networks see
// approximately aligned frames with holes, mirroring test-time inputs.
inline TrainingExample build_training_example(const Frame& f_prev, const Frame& f_i,
                                              const Frame& f_next,
                                              const FlowEstimator& est,
                                              std::mt19937& rng,
                                              double max_fraction = 1.0 / 8.0) {
    PseudoGt gt = make_pseudo_gt(f_i, rng, max_fraction);
    TrainingExample ex;
    auto wm = backward_warp(f_prev, estimate_flow(est, gt.f_s, f_prev), 1.0);
    auto wp = backward_warp(f_next, estimate_flow(est, gt.f_s, f_next), 1.0);
    auto wt = backward_warp(f_i, estimate_flow(est, gt.f_s, f_i), 1.0);
    ex.f_w_minus = std::move(wm.frame);
    ex.mask_minus = std::move(wm.mask);
    ex.f_w_plus = std::move(wp.frame);
    ex.mask_plus = std::move(wp.mask);
    ex.f_tilde = std::move(wt.frame);
    ex.mask_tilde = std::move(wt.mask);
    ex.f_i = f_i;
    ex.f_s = std::move(gt.f_s);
    return ex;
}

namespace detail {

template <class S>
double l1_mean(const nn::Tensor<S>& a, const nn::Tensor<S>& b) {
    double sum = 0;
    for (size_t i = 0; i < a.v.size(); ++i)
        sum += std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]));
    return sum / a.v.size();
}

template <class S>
void l1_mean_grad(const nn::Tensor<S>& a, const nn::Tensor<S>& b, double weight,
                  nn::Tensor<S>& da) {
    const S w = static_cast<S>(weight / a.v.size());
    for (size_t i = 0; i < a.v.size(); ++i) {
        const S d = a.v[i] - b.v[i];
        da.v[i] += d > S(0) ? w : (d < S(0) ? -w : S(0));
    }
}

template <class S>
double sq_mean(const nn::Tensor<S>& a, const nn::Tensor<S>& b) {
    double sum = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
        sum += d * d;
    }
    return sum / a.v.size();
}

}  // namespace detail

// Loss stack: mean absolute difference plus mean squared feature difference,
// applied to both the final output and the intermediate frame, unit weights.
template <class S>
LossReport compute_losses(const Frame& f_hat, const Frame& f_int, const Frame& f_s,
                          FeatureExtractor<S>& extractor) {
    if (!f_hat.same_shape(f_s) || !f_int.same_shape(f_s))
        throw std::runtime_error("compute_losses: dimension mismatch");
    const auto th = frame_to_tensor<S>(f_hat);
    const auto ti = frame_to_tensor<S>(f_int);
    const auto ts = frame_to_tensor<S>(f_s);
    const auto ps = extractor.forward(ts);
    const auto ph = extractor.forward(th);
    LossReport r;
    r.l1_out = detail::l1_mean(th, ts);
    r.perceptual_out = detail::sq_mean(ph, ps);
    const auto pi = extractor.forward(ti);
    r.l1_int = detail::l1_mean(ti, ts);
    r.perceptual_int = detail::sq_mean(pi, ps);
    r.total = r.l1_out + r.perceptual_out + r.l1_int + r.perceptual_int;
    return r;
}

// Forward + backward for one example; accumulates parameter gradients scaled
// by `grad_weight`. Pass grad_weight 0 to evaluate only.
template <class S>
LossReport train_example(NetPair<S>& nets, FeatureExtractor<S>& extractor,
                         const TrainingExample& ex, double grad_weight) {
    auto x = nn::concat_channels(frame_to_tensor<S>(ex.f_w_minus),
                                 frame_to_tensor<S>(ex.f_w_plus));
    if (nets.unet.include_masks()) {
        x = nn::concat_channels(x, mask_to_tensor<S>(ex.mask_minus));
        x = nn::concat_channels(x, mask_to_tensor<S>(ex.mask_plus));
    }
    const auto f_int = nets.unet.forward(x);
    const auto f_tilde = frame_to_tensor<S>(ex.f_tilde);
    const auto rin = nn::concat_channels(f_int, f_tilde);
    const auto f_hat = nets.resnet.forward(rin);
    const auto f_s = frame_to_tensor<S>(ex.f_s);

    LossReport r;
    r.l1_out = detail::l1_mean(f_hat, f_s);
    r.l1_int = detail::l1_mean(f_int, f_s);

    const auto phi_s = extractor.forward(f_s);
    const size_t nf = phi_s.v.size();

    nn::Tensor<S> d_int(f_int.c, f_int.h, f_int.w);
    {
        const auto phi_i = extractor.forward(f_int);
        r.perceptual_int = detail::sq_mean(phi_i, phi_s);
        if (grad_weight != 0.0) {
            nn::Tensor<S> dphi(phi_i.c, phi_i.h, phi_i.w);
            const S w = static_cast<S>(2.0 * grad_weight / nf);
            for (size_t i = 0; i < nf; ++i) dphi.v[i] = w * (phi_i.v[i] - phi_s.v[i]);
            const auto g = extractor.backward(dphi);
            for (size_t i = 0; i < d_int.v.size(); ++i) d_int.v[i] += g.v[i];
        }
    }

    nn::Tensor<S> d_hat(f_hat.c, f_hat.h, f_hat.w);
    {
        const auto phi_h = extractor.forward(f_hat);
        r.perceptual_out = detail::sq_mean(phi_h, phi_s);
        if (grad_weight != 0.0) {
            nn::Tensor<S> dphi(phi_h.c, phi_h.h, phi_h.w);
            const S w = static_cast<S>(2.0 * grad_weight / nf);
            for (size_t i = 0; i < nf; ++i) dphi.v[i] = w * (phi_h.v[i] - phi_s.v[i]);
            const auto g = extractor.backward(dphi);
            for (size_t i = 0; i < d_hat.v.size(); ++i) d_hat.v[i] += g.v[i];
        }
    }

    r.total = r.l1_out + r.perceptual_out + r.l1_int + r.perceptual_int;
    if (!std::isfinite(r.total))
        throw std::runtime_error("train_example: non-finite loss (training diverged)");

    if (grad_weight != 0.0) {
        detail::l1_mean_grad(f_hat, f_s, grad_weight, d_hat);
        detail::l1_mean_grad(f_int, f_s, grad_weight, d_int);
        auto d_rin = nets.resnet.backward(d_hat);
        nn::Tensor<S> d_int_res, d_tilde;
        nn::split_channels(d_rin, 3, d_int_res, d_tilde);
        for (size_t i = 0; i < d_int.v.size(); ++i) d_int.v[i] += d_int_res.v[i];
        nets.unet.backward(d_int);
    }
    return r;
}

template <class S>
struct AdamState {
    std::vector<S> m, v;
    uint64_t t = 0;

    void init(size_t n) {
        m.assign(n, S(0));
        v.assign(n, S(0));
        t = 0;
    }
};

template <class S>
void adam_step(std::vector<nn::Param<S>*>& params, AdamState<S>& state, double lr,
               const TrainingConfig& cfg) {
    ++state.t;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    size_t k = 0;
    for (auto* p : params)
        for (size_t i = 0; i < p->v.size(); ++i, ++k) {
            const double g = static_cast<double>(p->g[i]);
            const double m = b1 * state.m[k] + (1 - b1) * g;
            const double v = b2 * state.v[k] + (1 - b2) * g * g;
            state.m[k] = static_cast<S>(m);
            state.v[k] = static_cast<S>(v);
            p->v[i] -= static_cast<S>(lr * (m / bc1) /
                                      (std::sqrt(v / bc2) + cfg.adam_eps));
        }
}

// One optimizer step over a prepared batch. Per-example gradients are
// computed into separate buffers (possibly in parallel) and reduced in
// example order, so the result does not depend on the worker count.
template <class S>
LossReport training_step(NetPair<S>& nets, FeatureExtractor<S>& extractor,
                         const std::vector<TrainingExample>& batch,
                         const TrainingConfig& cfg, AdamState<S>& state, double lr,
                         int jobs = 1) {
    auto params = nets.parameters();
    size_t total_size = 0;
    for (auto* p : params) total_size += p->size();
    if (state.m.size() != total_size) state.init(total_size);

    const size_t b = batch.size();
    std::vector<std::vector<S>> grads(b);
    std::vector<LossReport> reports(b);
    std::exception_ptr err;
    std::mutex err_mu;

    auto work = [&](size_t begin, size_t end) {
        try {
            NetPair<S> local = nets;  // weights copy; activation caches private
            auto ext = extractor.clone();
            auto lp = local.parameters();
            for (size_t i = begin; i < end; ++i) {
                for (auto* p : lp) p->zero_grad();
                reports[i] = train_example(local, *ext, batch[i], 1.0 / b);
                auto& g = grads[i];
                g.reserve(total_size);
                for (auto* p : lp) g.insert(g.end(), p->g.begin(), p->g.end());
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
        }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(b)));
    if (workers == 1) {
        work(0, b);
    } else {
        std::vector<std::thread> threads;
        const size_t chunk = (b + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const size_t begin = w * chunk;
            const size_t end = std::min(b, begin + chunk);
            if (begin < end) threads.emplace_back(work, begin, end);
        }
        for (auto& t : threads) t.join();
    }
    if (err) std::rethrow_exception(err);

    for (auto* p : params) p->zero_grad();
    for (size_t i = 0; i < b; ++i) {
        size_t k = 0;
        for (auto* p : params)
            for (size_t j = 0; j < p->g.size(); ++j, ++k) p->g[j] += grads[i][k];
    }
    adam_step(params, state, lr, cfg);
    ++nets.step;

    LossReport mean;
    for (const auto& r : reports) {
        mean.l1_out += r.l1_out / b;
        mean.perceptual_out += r.perceptual_out / b;
        mean.l1_int += r.l1_int / b;
        mean.perceptual_int += r.perceptual_int / b;
        mean.total += r.total / b;
    }
    return mean;
}

// ---- full training loop over a clip dataset ----

struct FlipState {
    bool horizontal = false;
    bool vertical = false;
};

inline Frame flip_frame(const Frame& f, FlipState fs) {
    if (!fs.horizontal && !fs.vertical) return f;
    Frame out(f.height, f.width, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) {
                const int sy = fs.vertical ? f.height - 1 - y : y;
                const int sx = fs.horizontal ? f.width - 1 - x : x;
                out.at(c, y, x) = f.at(c, sy, sx);
            }
    if (f.pose) {
        Affine2 m = Affine2::identity();
        if (fs.horizontal) {
            m.m00 = -1;
            m.tx = f.width - 1;
        }
        if (fs.vertical) {
            m.m11 = -1;
            m.ty = f.height - 1;
        }
        out.pose = f.pose->compose(m);
    }
    return out;
}

inline Frame crop_frame(const Frame& f, int ox, int oy, int size) {
    Frame out(size, size, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) out.at(c, y, x) = f.at(c, y + oy, x + ox);
    if (f.pose) out.pose = f.pose->compose(Affine2::translation(ox, oy));
    return out;
}

struct TrainOptions {
    int steps = 500;
    int jobs = 1;
    std::string log_csv;  // optional per-step loss log
    std::function<void(int, const LossReport&)> progress;
};

template <class S>
std::vector<LossReport> train(NetPair<S>& nets, FeatureExtractor<S>& extractor,
                              const std::vector<VideoSequence>& clips,
                              const FlowEstimator& est, const TrainingConfig& cfg,
                              const TrainOptions& opts) {
    cfg.validate();
    if (clips.empty()) throw std::runtime_error("train: empty dataset");

    size_t triplets = 0;
    for (const auto& c : clips)
        if (c.size() >= 3) triplets += c.size() - 2;
    if (triplets == 0) throw std::runtime_error("train: no usable triplets (clips too short)");
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(triplets / cfg.batch_size));

    AdamState<S> state;
    std::vector<LossReport> history;
    std::ofstream log;
    if (!opts.log_csv.empty()) {
        log.open(opts.log_csv);
        log << "epoch,step,l1_out,perceptual_out,l1_int,perceptual_int,total\n";
    }

    for (int step = 0; step < opts.steps; ++step) {
        std::vector<TrainingExample> batch;
        batch.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            // Per-example RNG derived from (seed, step, i): sampling is
            // independent of worker scheduling.
            std::seed_seq seq{static_cast<uint32_t>(cfg.seed),
                              static_cast<uint32_t>(cfg.seed >> 32),
                              static_cast<uint32_t>(step), static_cast<uint32_t>(i)};
            std::mt19937 rng(seq);
            const auto& clip = clips[rng() % clips.size()];
            if (clip.size() < 3) { --i; continue; }
            const size_t center = 1 + rng() % (clip.size() - 2);
            Frame fp = clip.frames[center - 1];
            Frame fi = clip.frames[center];
            Frame fn = clip.frames[center + 1];
            const int size = std::min({cfg.patch_size, fi.height, fi.width});
            if (size < fi.height || size < fi.width) {
                std::uniform_int_distribution<int> dx(0, fi.width - size);
                std::uniform_int_distribution<int> dy(0, fi.height - size);
                const int ox = dx(rng), oy = dy(rng);
                fp = crop_frame(fp, ox, oy, size);
                fi = crop_frame(fi, ox, oy, size);
                fn = crop_frame(fn, ox, oy, size);
            }
            if (cfg.augment_flips) {
                FlipState fs{rng() % 2 == 0, rng() % 2 == 0};
                fp = flip_frame(fp, fs);
                fi = flip_frame(fi, fs);
                fn = flip_frame(fn, fs);
            }
            batch.push_back(build_training_example(fp, fi, fn, est, rng,
                                                   cfg.max_translation_fraction));
        }
        const double epoch = static_cast<double>(step) / steps_per_epoch;
        const double lr = lr_at(cfg, epoch);
        LossReport r = training_step(nets, extractor, batch, cfg, state, lr, opts.jobs);
        history.push_back(r);
        if (log.is_open())
            log << epoch << ',' << step << ',' << r.l1_out << ',' << r.perceptual_out
                << ',' << r.l1_int << ',' << r.perceptual_int << ',' << r.total << '\n';
        if (opts.progress) opts.progress(step, r);
    }
    return history;
}

}  // namespace midframe
