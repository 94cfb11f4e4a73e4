#include "midframe/stabilizer.hpp"

#include <iostream>
#include <mutex>
#include <thread>

namespace midframe {

int effective_skip(int index, int frame_count, int skip) {
    if (index < 0 || index >= frame_count)
        throw std::runtime_error("effective_skip: index out of range");
    return std::min({skip, index, frame_count - 1 - index});
}

void StabilizeConfig::validate() const {
    if (iterations < 0) throw std::runtime_error("stabilize: iterations must be >= 0");
    if (skip < 1) throw std::runtime_error("stabilize: skip must be >= 1");
    if (jobs < 1) throw std::runtime_error("stabilize: jobs must be >= 1");
}

Frame BypassFusion::fuse(const HalfwayPair& pair) {
    const Frame& a = pair.f_minus;
    const Frame& b = pair.f_plus;
    Frame out(a.height, a.width, a.channels);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            const bool va = pair.mask_minus.at(y, x);
            const bool vb = pair.mask_plus.at(y, x);
            for (int c = 0; c < a.channels; ++c) {
                if (va && vb)
                    out.at(c, y, x) = 0.5f * (a.at(c, y, x) + b.at(c, y, x));
                else if (va)
                    out.at(c, y, x) = a.at(c, y, x);
                else if (vb)
                    out.at(c, y, x) = b.at(c, y, x);
            }
        }
    if (a.pose && b.pose && a.pose->approx_equal(*b.pose, 1e-6)) out.pose = a.pose;
    return out;
}

Frame BypassFusion::refine(const Frame& f_int, const Frame& f_tilde,
                           const ValidityMask& tilde_mask) {
    Frame out = f_int;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (tilde_mask.at(y, x))
                for (int c = 0; c < out.channels; ++c)
                    out.at(c, y, x) = f_tilde.at(c, y, x);
    if (f_tilde.pose)
        out.pose = f_tilde.pose;
    return out;
}

std::unique_ptr<FusionEngine> BypassFusion::clone() const {
    return std::make_unique<BypassFusion>(*this);
}

Frame NetFusion::fuse(const HalfwayPair& pair) {
    return unet_forward(nets_.unet, pair.f_minus, pair.f_plus, pair.mask_minus,
                        pair.mask_plus);
}

Frame NetFusion::refine(const Frame& f_int, const Frame& f_tilde,
                        const ValidityMask&) {
    return resnet_forward(nets_.resnet, f_int, f_tilde);
}

std::unique_ptr<FusionEngine> NetFusion::clone() const {
    return std::make_unique<NetFusion>(*this);
}

Frame synthesize_frame(const Frame& prev, const Frame& cur, const Frame& next,
                       const FlowEstimator& est, FusionEngine& engine) {
    const HalfwayPair pair = halfway_pair(est, prev, next);
    Frame f_int = engine.fuse(pair);
    const FlowField to_cur = estimate_flow(est, f_int, cur);
    WarpResult tilde = backward_warp(cur, to_cur, 1.0);
    Frame out = engine.refine(f_int, tilde.frame, tilde.mask);
    out.clamp01();
    return out;
}

VideoSequence iteration_pass(const VideoSequence& video, const FlowEstimator& est,
                             FusionEngine& engine, int skip, int jobs) {
    const int n = static_cast<int>(video.size());
    VideoSequence out;
    out.fps = video.fps;
    out.frames.resize(n);

    auto run_range = [&](FusionEngine& eng, int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const int s = effective_skip(i, n, skip);
            if (s == 0)
                out.frames[i] = video.frames[i];
            else
                out.frames[i] = synthesize_frame(video.frames[i - s], video.frames[i],
                                                 video.frames[i + s], est, eng);
        }
    };

    const int workers = std::max(1, std::min(jobs, n));
    if (workers == 1) {
        run_range(engine, 0, n);
        return out;
    }
    std::vector<std::unique_ptr<FusionEngine>> engines;
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        engines.push_back(engine.clone());
        const int begin = n * w / workers;
        const int end = n * (w + 1) / workers;
        threads.emplace_back([&, begin, end, w] {
            try {
                run_range(*engines[w], begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

VideoSequence stabilize(const VideoSequence& video, const FlowEstimator& est,
                        FusionEngine& engine, const StabilizeConfig& config) {
    config.validate();
    if (video.empty()) throw std::runtime_error("stabilize: empty video");
    VideoSequence cur = video;
    if (video.size() < 3 || config.iterations == 0) return cur;
    for (int it = 0; it < config.iterations; ++it) {
        cur = iteration_pass(cur, est, engine, config.skip, config.jobs);
        if (config.verbose)
            std::cerr << "stabilize: pass " << (it + 1) << "/" << config.iterations
                      << " done\n";
    }
    return cur;
}

}  // namespace midframe
