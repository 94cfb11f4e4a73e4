#include "midframe/flow.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace midframe {

FlowField FlowField::from_transform(const Affine2& t, int h, int w) {
    FlowField f(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double ox, oy;
            t.apply(x, y, ox, oy);
            f.u_at(y, x) = static_cast<float>(ox - x);
            f.v_at(y, x) = static_cast<float>(oy - y);
        }
    }
    f.parametric = t;
    return f;
}

FlowField AnalyticOracleFlow::estimate(const Frame& a, const Frame& b) const {
    if (a.height != b.height || a.width != b.width)
        throw std::runtime_error("oracle flow: dimension mismatch");
    if (!a.pose || !b.pose)
        throw std::runtime_error(
            "oracle flow: frame without a pose annotation (oracle mode requires "
            "synthetically generated or pose-propagated frames)");
    // a(p) = S(A p), b(q) = S(B q)  =>  q = B^-1 A p.
    const Affine2 t = b.pose->inverse().compose(*a.pose);
    return FlowField::from_transform(t, a.height, a.width);
}

FlowField estimate_flow(const FlowEstimator& est, const Frame& a, const Frame& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::runtime_error("estimate_flow: dimension mismatch");
    return est.estimate(a, b);
}

WarpResult backward_warp(const Frame& src, const FlowField& flow, double scale) {
    if (flow.height != src.height || flow.width != src.width)
        throw std::runtime_error("backward_warp: flow grid does not match frame");
    if (scale < 0.0 || scale > 1.0)
        throw std::runtime_error("backward_warp: scale outside [0,1]");

    WarpResult r{Frame(src.height, src.width, src.channels),
                 ValidityMask(src.height, src.width, true)};
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            const float fu = flow.u_at(y, x), fv = flow.v_at(y, x);
            if (!std::isfinite(fu) || !std::isfinite(fv))
                throw std::runtime_error("backward_warp: non-finite flow value");
            const double sx = x + scale * fu;
            const double sy = y + scale * fv;
            bool ok = true;
            for (int c = 0; c < src.channels; ++c) {
                float val;
                ok = src.sample(c, sx, sy, val);
                r.frame.at(c, y, x) = val;
            }
            r.mask.at(y, x) = ok ? 1 : 0;
        }
    }
    // Pose propagation: out(p) = src((1-s)p + s*T(p)) is again an affine view
    // of the source whenever the flow came from a global transform.
    if (flow.parametric && src.pose) {
        const Affine2& t = *flow.parametric;
        Affine2 warp_map;
        warp_map.m00 = (1 - scale) + scale * t.m00;
        warp_map.m01 = scale * t.m01;
        warp_map.m10 = scale * t.m10;
        warp_map.m11 = (1 - scale) + scale * t.m11;
        warp_map.tx = scale * t.tx;
        warp_map.ty = scale * t.ty;
        r.frame.pose = src.pose->compose(warp_map);
    }
    return r;
}

HalfwayPair halfway_pair(const FlowEstimator& est, const Frame& f_prev,
                         const Frame& f_next) {
    if (!f_prev.same_shape(f_next))
        throw std::runtime_error("halfway_pair: dimension mismatch");
    const FlowField fwd = estimate_flow(est, f_prev, f_next);
    const FlowField bwd = estimate_flow(est, f_next, f_prev);
    WarpResult plus = backward_warp(f_next, fwd, 0.5);
    WarpResult minus = backward_warp(f_prev, bwd, 0.5);
    // Both halfway warps live on the near-midpoint grid, but bwd was computed
    // on f_next's grid; for global motion the two grids coincide at scale 0.5.
    return HalfwayPair{std::move(minus.frame), std::move(plus.frame),
                       std::move(minus.mask), std::move(plus.mask)};
}

static constexpr uint32_t kFlowMagic = 0x4C46464Du;  // 'MFFL'

void write_flow_dump(const FlowField& flow, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_flow_dump: cannot open " + path);
    const uint32_t h = flow.height, w = flow.width;
    out.write(reinterpret_cast<const char*>(&kFlowMagic), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            const float uv[2] = {flow.u_at(y, x), flow.v_at(y, x)};
            out.write(reinterpret_cast<const char*>(uv), 8);
        }
    }
    if (!out) throw std::runtime_error("write_flow_dump: write failed: " + path);
}

FlowField read_flow_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_flow_dump: cannot open " + path);
    uint32_t magic = 0, h = 0, w = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    if (!in || magic != kFlowMagic)
        throw std::runtime_error("read_flow_dump: bad header in " + path);
    FlowField flow(static_cast<int>(h), static_cast<int>(w));
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            float uv[2];
            in.read(reinterpret_cast<char*>(uv), 8);
            flow.u_at(y, x) = uv[0];
            flow.v_at(y, x) = uv[1];
        }
    }
    if (!in) throw std::runtime_error("read_flow_dump: truncated file " + path);
    return flow;
}

}  // namespace midframe
