#pragma once

#include <memory>
#include <string>
#include <utility>

#include "midframe/core.hpp"

namespace midframe {

// Dense displacement field between two frames.
// Convention: for F = estimate_flow(a, b), a(p) corresponds to b(p + F(p));
// the field lives on a's pixel grid.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> u, v;  // horizontal / vertical displacement, pixels

    // Set when the field was produced from a known global transform T with
    // F(p) = T(p) - p. Lets warps propagate frame poses exactly.
    std::optional<Affine2> parametric;

    FlowField() = default;
    FlowField(int h, int w)
        : height(h), width(w),
          u(static_cast<size_t>(h) * w, 0.f), v(static_cast<size_t>(h) * w, 0.f) {}

    float& u_at(int y, int x) { return u[static_cast<size_t>(y) * width + x]; }
    float& v_at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
    float u_at(int y, int x) const { return u[static_cast<size_t>(y) * width + x]; }
    float v_at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }

    static FlowField from_transform(const Affine2& t, int h, int w);
};

class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual std::string name() const = 0;
    // Estimates flow from a to b on a's grid. Throws on dimension mismatch
    // or estimator-specific failure.
    virtual FlowField estimate(const Frame& a, const Frame& b) const = 0;
};

// Exact flow for frames that carry a pose (synthetic benchmark output and
// frames derived from it by parametric warps). Throws when a pose is missing.
class AnalyticOracleFlow : public FlowEstimator {
public:
    std::string name() const override { return "oracle"; }
    FlowField estimate(const Frame& a, const Frame& b) const override;
};

FlowField estimate_flow(const FlowEstimator& est, const Frame& a, const Frame& b);

struct WarpResult {
    Frame frame;
    ValidityMask mask;
};

// out(p) = bilinear sample of src at p + scale * F(p). Out-of-bounds samples
// produce 0 with mask=false. scale=0 is the identity warp.
WarpResult backward_warp(const Frame& src, const FlowField& flow, double scale);

struct HalfwayPair {
    Frame f_minus, f_plus;          // halfway warps of prev / next
    ValidityMask mask_minus, mask_plus;
};

// Warps f_prev and f_next halfway toward each other; both outputs approximate
// the temporal midpoint between the two frames.
HalfwayPair halfway_pair(const FlowEstimator& est, const Frame& f_prev,
                         const Frame& f_next);

// Debug dump format: 12-byte header (magic 'MFFL', height, width as uint32
// little-endian) followed by interleaved (u, v) float32 pairs, row-major.
void write_flow_dump(const FlowField& flow, const std::string& path);
FlowField read_flow_dump(const std::string& path);

}  // namespace midframe
