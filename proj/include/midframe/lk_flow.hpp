#pragma once

#include "midframe/flow.hpp"

namespace midframe {

// Coarse-to-fine dense Lucas-Kanade flow. Self-contained classical estimator;
// the default choice for real footage where no analytic ground truth exists.
class PyramidalLKFlow : public FlowEstimator {
public:
    struct Params {
        int max_levels = 5;
        int min_dim = 24;        // stop building the pyramid below this size
        int window_radius = 4;
        int iterations_per_level = 5;
        double damping = 1e-3;   // added to the normal-equation diagonal
    };

    PyramidalLKFlow() = default;
    explicit PyramidalLKFlow(const Params& p) : params_(p) {}

    std::string name() const override { return "classical"; }
    FlowField estimate(const Frame& a, const Frame& b) const override;

private:
    Params params_;
};

}  // namespace midframe
