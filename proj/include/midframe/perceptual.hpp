#pragma once

#include <memory>

#include "midframe/checkpoint.hpp"
#include "midframe/nn.hpp"

namespace midframe {

// Frozen feature map for the perceptual loss term. Gradients propagate
// through to the input image but never into the extractor itself.
template <class S>
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string name() const = 0;
    virtual nn::Tensor<S> forward(const nn::Tensor<S>& img) = 0;
    virtual nn::Tensor<S> backward(const nn::Tensor<S>& dfeat) = 0;
    virtual std::unique_ptr<FeatureExtractor<S>> clone() const = 0;
};

// Frozen randomly-initialized conv stack with a recorded seed. Desk-scale
// default: keeps the structure of the perceptual loss without a large
// pretrained dependency.
template <class S>
class FixedRandomExtractor : public FeatureExtractor<S> {
public:
    explicit FixedRandomExtractor(uint64_t seed = 1234)
        : seed_(seed),
          c1_("percept.c1", 3, 8, 3, 2, nn::Act::LeakyRelu, false),
          c2_("percept.c2", 8, 16, 3, 2, nn::Act::LeakyRelu, false),
          c3_("percept.c3", 16, 16, 3, 1, nn::Act::Linear, false) {
        std::mt19937 rng(static_cast<uint32_t>(seed));
        c1_.init(rng);
        c2_.init(rng);
        c3_.init(rng);
    }

    std::string name() const override { return "random"; }
    uint64_t seed() const { return seed_; }

    nn::Tensor<S> forward(const nn::Tensor<S>& img) override {
        return c3_.forward(c2_.forward(c1_.forward(img)));
    }
    nn::Tensor<S> backward(const nn::Tensor<S>& dfeat) override {
        return c1_.backward(c2_.backward(c3_.backward(dfeat)));
    }
    std::unique_ptr<FeatureExtractor<S>> clone() const override {
        return std::make_unique<FixedRandomExtractor<S>>(*this);
    }

private:
    uint64_t seed_;
    nn::Conv2d<S> c1_, c2_, c3_;
};

// Deep classification-style feature stack loaded from serialized weights.
// Drop-in replacement when paper-faithful features are wanted; errors out
// when no weight file is supplied.
template <class S>
class DeepFeatureExtractor : public FeatureExtractor<S> {
public:
    explicit DeepFeatureExtractor(const std::string& weights_path) {
        using nn::Act;
        layers_.emplace_back("deep.c1", 3, 64, 3, 1, Act::LeakyRelu, false);
        layers_.emplace_back("deep.c2", 64, 64, 3, 2, Act::LeakyRelu, false);
        layers_.emplace_back("deep.c3", 64, 128, 3, 1, Act::LeakyRelu, false);
        layers_.emplace_back("deep.c4", 128, 128, 3, 2, Act::LeakyRelu, false);
        std::vector<nn::Param<S>*> params;
        for (auto& l : layers_) l.collect(params);
        load_tensors(params, weights_path);
    }

    std::string name() const override { return "deep"; }

    nn::Tensor<S> forward(const nn::Tensor<S>& img) override {
        auto t = img;
        for (auto& l : layers_) t = l.forward(t);
        return t;
    }
    nn::Tensor<S> backward(const nn::Tensor<S>& dfeat) override {
        auto d = dfeat;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            d = it->backward(d);
        return d;
    }
    std::unique_ptr<FeatureExtractor<S>> clone() const override {
        return std::make_unique<DeepFeatureExtractor<S>>(*this);
    }

private:
    std::vector<nn::Conv2d<S>> layers_;
};

}  // namespace midframe
