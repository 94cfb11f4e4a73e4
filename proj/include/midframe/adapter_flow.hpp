#pragma once

#include "midframe/checkpoint.hpp"
#include "midframe/flow.hpp"
#include "midframe/nn.hpp"

namespace midframe {

// Drop-in learned flow estimator: a small convolutional stack over the
// concatenated frame pair. The raw network output is antisymmetrized,
// F = (net(a, b) - net(b, a)) / 2, so estimate_flow(a, a) is exactly zero and
// reversing the arguments exactly negates the field. Weights come from a
// tensor container produced by save_weights (or any compatible trainer);
// construction from a path fails loudly when the file is missing.
class LearnedFlowAdapter : public FlowEstimator {
public:
    explicit LearnedFlowAdapter(const std::string& weights_path) : LearnedFlowAdapter() {
        load_tensors(parameters(), weights_path);
    }

    static LearnedFlowAdapter with_random_weights(uint64_t seed) {
        LearnedFlowAdapter a;
        std::mt19937 rng(static_cast<uint32_t>(seed));
        for (auto* l : a.layers()) l->init(rng);
        return a;
    }

    std::string name() const override { return "adapter"; }

    FlowField estimate(const Frame& a, const Frame& b) const override {
        if (!a.same_shape(b))
            throw std::runtime_error("LearnedFlowAdapter: dimension mismatch");
        if (a.channels != 3)
            throw std::runtime_error("LearnedFlowAdapter: expects 3-channel frames");
        auto fwd = run(a, b);
        auto bwd = run(b, a);
        FlowField flow(a.height, a.width);
        for (size_t i = 0; i < flow.u.size(); ++i) {
            flow.u[i] = 0.5f * (fwd.v[i] - bwd.v[i]);
            flow.v[i] = 0.5f * (fwd.v[flow.u.size() + i] - bwd.v[flow.u.size() + i]);
        }
        return flow;
    }

    void save_weights(const std::string& path) {
        save_tensors(parameters(), 0, path);
    }

    std::vector<nn::Param<float>*> parameters() {
        std::vector<nn::Param<float>*> out;
        for (auto* l : layers()) l->collect(out);
        return out;
    }

private:
    LearnedFlowAdapter() {
        using nn::Act;
        c0_ = {"flownet.c0", 6, 16, 3, 1, Act::LeakyRelu};
        c1_ = {"flownet.c1", 16, 16, 3, 1, Act::LeakyRelu};
        c2_ = {"flownet.c2", 16, 2, 3, 1, Act::Linear};
    }

    std::vector<nn::Conv2d<float>*> layers() { return {&c0_, &c1_, &c2_}; }

    nn::Tensor<float> run(const Frame& a, const Frame& b) const {
        auto x = nn::concat_channels(frame_to_tensor<float>(a), frame_to_tensor<float>(b));
        // forward caches are scratch only; keep the estimator interface const
        auto* self = const_cast<LearnedFlowAdapter*>(this);
        return self->c2_.forward(self->c1_.forward(self->c0_.forward(x)));
    }

    nn::Conv2d<float> c0_, c1_, c2_;
};

}  // namespace midframe
