#pragma once

#include "midframe/flow.hpp"
#include "midframe/nets.hpp"

namespace midframe {

// Neighbor distance used when synthesizing frame `index` of `frame_count`,
// shrunk near the boundaries so both neighbors exist. Zero means the frame is
// copied through unchanged (always the case for the first and last frame).
int effective_skip(int index, int frame_count, int skip);

struct StabilizeConfig {
    int iterations = 5;
    int skip = 2;
    int jobs = 1;
    bool verbose = false;

    void validate() const;
};

// Strategy for the two learned stages of the per-frame synthesis: fusing the
// halfway-warped neighbors into the intermediate frame, and refining the
// re-warped original against it.
class FusionEngine {
public:
    virtual ~FusionEngine() = default;
    virtual std::string name() const = 0;
    virtual Frame fuse(const HalfwayPair& pair) = 0;
    virtual Frame refine(const Frame& f_int, const Frame& f_tilde,
                         const ValidityMask& tilde_mask) = 0;
    // Engines keep per-call scratch state; each worker thread gets a clone.
    virtual std::unique_ptr<FusionEngine> clone() const = 0;
};

// Network-free reference engine: fuse is a validity-aware average, refine
// composites the re-warped original over the intermediate frame. Propagates
// frame poses, so combined with the analytic flow oracle the whole pipeline
// reduces exactly to midpoint averaging of the camera path.
class BypassFusion : public FusionEngine {
public:
    std::string name() const override { return "bypass"; }
    Frame fuse(const HalfwayPair& pair) override;
    Frame refine(const Frame& f_int, const Frame& f_tilde,
                 const ValidityMask& tilde_mask) override;
    std::unique_ptr<FusionEngine> clone() const override;
};

// Learned engine wrapping the fusion U-Net and refinement ResNet.
class NetFusion : public FusionEngine {
public:
    explicit NetFusion(NetPair<float> nets) : nets_(std::move(nets)) {}
    std::string name() const override { return "net"; }
    Frame fuse(const HalfwayPair& pair) override;
    Frame refine(const Frame& f_int, const Frame& f_tilde,
                 const ValidityMask& tilde_mask) override;
    std::unique_ptr<FusionEngine> clone() const override;

    NetPair<float>& nets() { return nets_; }

private:
    NetPair<float> nets_;
};

// One frame of one pass: halfway-warp the neighbors, fuse, warp the original
// toward the fused frame, refine. Result is clamped to [0, 1].
Frame synthesize_frame(const Frame& prev, const Frame& cur, const Frame& next,
                       const FlowEstimator& est, FusionEngine& engine);

// One full pass. All outputs are computed from the input sequence (Jacobi
// update); frames with effective skip 0 are copied.
VideoSequence iteration_pass(const VideoSequence& video, const FlowEstimator& est,
                             FusionEngine& engine, int skip, int jobs = 1);

// The full stabilizer: `iterations` passes of iteration_pass.
VideoSequence stabilize(const VideoSequence& video, const FlowEstimator& est,
                        FusionEngine& engine, const StabilizeConfig& config = {});

}  // namespace midframe
