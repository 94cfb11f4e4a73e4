#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace midframe {

// 2D affine transform, p_out = M * p + t. Frames generated by the synthetic
// benchmark carry one of these as a pose mapping frame coordinates to source
// image coordinates; the analytic flow oracle is built on top of it.
struct Affine2 {
    double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    double tx = 0, ty = 0;

    static Affine2 identity() { return {}; }
    static Affine2 translation(double x, double y) { return {1, 0, 0, 1, x, y}; }

    void apply(double x, double y, double& ox, double& oy) const {
        ox = m00 * x + m01 * y + tx;
        oy = m10 * x + m11 * y + ty;
    }

    // this ∘ other: apply `other` first.
    Affine2 compose(const Affine2& o) const {
        Affine2 r;
        r.m00 = m00 * o.m00 + m01 * o.m10;
        r.m01 = m00 * o.m01 + m01 * o.m11;
        r.m10 = m10 * o.m00 + m11 * o.m10;
        r.m11 = m10 * o.m01 + m11 * o.m11;
        r.tx = m00 * o.tx + m01 * o.ty + tx;
        r.ty = m10 * o.tx + m11 * o.ty + ty;
        return r;
    }

    Affine2 inverse() const {
        const double det = m00 * m11 - m01 * m10;
        if (std::abs(det) < 1e-14)
            throw std::runtime_error("Affine2::inverse: singular transform");
        Affine2 r;
        r.m00 = m11 / det;
        r.m01 = -m01 / det;
        r.m10 = -m10 / det;
        r.m11 = m00 / det;
        r.tx = -(r.m00 * tx + r.m01 * ty);
        r.ty = -(r.m10 * tx + r.m11 * ty);
        return r;
    }

    bool approx_equal(const Affine2& o, double eps = 1e-9) const {
        return std::abs(m00 - o.m00) < eps && std::abs(m01 - o.m01) < eps &&
               std::abs(m10 - o.m10) < eps && std::abs(m11 - o.m11) < eps &&
               std::abs(tx - o.tx) < eps && std::abs(ty - o.ty) < eps;
    }
};

// One video frame. Channel-major float storage, values nominally in [0, 1].
struct Frame {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;  // size channels*height*width, row-major per channel

    // Set by the synthetic generator and propagated through oracle warps.
    std::optional<Affine2> pose;

    Frame() = default;
    Frame(int h, int w, int c, float fill = 0.f)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(c) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Frame& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    // Bilinear sample with zero fill outside [0,W-1]x[0,H-1].
    // Returns false when the sample point falls outside the frame.
    bool sample(int c, double x, double y, float& out) const {
        if (x < 0.0 || y < 0.0 || x > width - 1.0 || y > height - 1.0) {
            out = 0.f;
            return false;
        }
        int x0 = static_cast<int>(std::floor(x));
        int y0 = static_cast<int>(std::floor(y));
        if (x0 > width - 2) x0 = width - 2;
        if (y0 > height - 2) y0 = height - 2;
        if (width == 1) x0 = 0;
        if (height == 1) y0 = 0;
        const double fx = x - x0, fy = y - y0;
        const int x1 = (width == 1) ? x0 : x0 + 1;
        const int y1 = (height == 1) ? y0 : y0 + 1;
        const double v00 = at(c, y0, x0), v01 = at(c, y0, x1);
        const double v10 = at(c, y1, x0), v11 = at(c, y1, x1);
        out = static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11));
        return true;
    }

    void clamp01() {
        for (float& v : data) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Per-pixel validity: true where a warp sampled inside the source bounds.
struct ValidityMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> valid;

    ValidityMask() = default;
    ValidityMask(int h, int w, bool fill = true)
        : height(h), width(w),
          valid(static_cast<size_t>(h) * w, fill ? 1 : 0) {}

    uint8_t& at(int y, int x) { return valid[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return valid[static_cast<size_t>(y) * width + x]; }

    bool all_true() const {
        for (uint8_t v : valid)
            if (!v) return false;
        return true;
    }
};

struct VideoSequence {
    std::vector<Frame> frames;
    double fps = 30.0;

    size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

// Per-frame camera-path samples used by the metrics and the synthetic oracle.
struct TrajectorySignal {
    std::vector<double> tx, ty, theta;

    size_t size() const { return tx.size(); }
    void push(double x, double y, double t) {
        tx.push_back(x);
        ty.push_back(y);
        theta.push_back(t);
    }
};

}  // namespace midframe
