#include "midframe/lk_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace midframe {

namespace {

struct Gray {
    int h = 0, w = 0;
    std::vector<float> v;
    Gray() = default;
    Gray(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.f) {}
    float& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

Gray to_gray(const Frame& f) {
    Gray g(f.height, f.width);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            if (f.channels >= 3)
                g.at(y, x) = 0.299f * f.at(0, y, x) + 0.587f * f.at(1, y, x) +
                             0.114f * f.at(2, y, x);
            else
                g.at(y, x) = f.at(0, y, x);
        }
    return g;
}

// 1-2-1 blur then 2x decimation.
Gray downsample(const Gray& g) {
    Gray blurred(g.h, g.w);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, g.w - 1);
            blurred.at(y, x) = 0.25f * g.at(y, xm) + 0.5f * g.at(y, x) +
                               0.25f * g.at(y, xp);
        }
    Gray blurred2(g.h, g.w);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, g.h - 1);
            blurred2.at(y, x) = 0.25f * blurred.at(ym, x) + 0.5f * blurred.at(y, x) +
                                0.25f * blurred.at(yp, x);
        }
    Gray out((g.h + 1) / 2, (g.w + 1) / 2);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.at(y, x) = blurred2.at(std::min(2 * y, g.h - 1), std::min(2 * x, g.w - 1));
    return out;
}

bool sample_bilinear(const Gray& g, double x, double y, float& out) {
    if (x < 0.0 || y < 0.0 || x > g.w - 1.0 || y > g.h - 1.0) {
        out = 0.f;
        return false;
    }
    int x0 = std::min(static_cast<int>(std::floor(x)), g.w - 2);
    int y0 = std::min(static_cast<int>(std::floor(y)), g.h - 2);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    const double fx = x - x0, fy = y - y0;
    out = static_cast<float>((1 - fy) * ((1 - fx) * g.at(y0, x0) + fx * g.at(y0, x0 + 1)) +
                             fy * ((1 - fx) * g.at(y0 + 1, x0) + fx * g.at(y0 + 1, x0 + 1)));
    return true;
}

// Integral image (summed-area table) for windowed sums in O(1) per pixel.
struct Integral {
    int h, w;
    std::vector<double> s;  // (h+1) x (w+1)
    Integral(int h_, int w_) : h(h_), w(w_), s(static_cast<size_t>(h_ + 1) * (w_ + 1), 0.0) {}
    double& at(int y, int x) { return s[static_cast<size_t>(y) * (w + 1) + x]; }
    double at(int y, int x) const { return s[static_cast<size_t>(y) * (w + 1) + x]; }
    void build(const std::vector<double>& img) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                at(y + 1, x + 1) = img[static_cast<size_t>(y) * w + x] + at(y, x + 1) +
                                   at(y + 1, x) - at(y, x);
    }
    double window(int y, int x, int r) const {
        const int y0 = std::max(y - r, 0), x0 = std::max(x - r, 0);
        const int y1 = std::min(y + r, h - 1), x1 = std::min(x + r, w - 1);
        return at(y1 + 1, x1 + 1) - at(y0, x1 + 1) - at(y1 + 1, x0) + at(y0, x0);
    }
};

void median_filter(std::vector<float>& field, int h, int w, int r) {
    std::vector<float> out(field.size());
    std::vector<float> win;
    win.reserve(static_cast<size_t>(2 * r + 1) * (2 * r + 1));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            win.clear();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    win.push_back(field[static_cast<size_t>(yy) * w + xx]);
                }
            std::nth_element(win.begin(), win.begin() + win.size() / 2, win.end());
            out[static_cast<size_t>(y) * w + x] = win[win.size() / 2];
        }
    field.swap(out);
}

// 3x3 median via a 9-element sorting network; much cheaper than the generic
// filter and hit once per Gauss-Newton iteration.
void median3(std::vector<float>& field, int h, int w) {
    std::vector<float> out(field.size());
    auto mn = [](float& a, float& b) {
        if (b < a) std::swap(a, b);
    };
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            auto v = [&](int yy, int xx) { return field[static_cast<size_t>(yy) * w + xx]; };
            float p0 = v(ym, xm), p1 = v(ym, x), p2 = v(ym, xp);
            float p3 = v(y, xm), p4 = v(y, x), p5 = v(y, xp);
            float p6 = v(yp, xm), p7 = v(yp, x), p8 = v(yp, xp);
            mn(p1, p2); mn(p4, p5); mn(p7, p8);
            mn(p0, p1); mn(p3, p4); mn(p6, p7);
            mn(p1, p2); mn(p4, p5); mn(p7, p8);
            mn(p0, p3); mn(p5, p8); mn(p4, p7);
            mn(p3, p6); mn(p1, p4); mn(p2, p5);
            mn(p4, p7); mn(p4, p2); mn(p6, p4);
            mn(p4, p2);
            out[static_cast<size_t>(y) * w + x] = p4;
        }
    }
    field.swap(out);
}

void box3(std::vector<float>& field, int h, int w) {
    std::vector<float> out(field.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sum = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    sum += field[static_cast<size_t>(yy) * w + xx];
                }
            out[static_cast<size_t>(y) * w + x] = static_cast<float>(sum / 9.0);
        }
    field.swap(out);
}

void resize_flow_2x(const FlowField& src, FlowField& dst) {
    for (int y = 0; y < dst.height; ++y)
        for (int x = 0; x < dst.width; ++x) {
            const double sx = std::min(x * 0.5, src.width - 1.0);
            const double sy = std::min(y * 0.5, src.height - 1.0);
            int x0 = std::min(static_cast<int>(sx), src.width - 2);
            int y0 = std::min(static_cast<int>(sy), src.height - 2);
            x0 = std::max(x0, 0);
            y0 = std::max(y0, 0);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double fx = sx - x0, fy = sy - y0;
            auto lerp = [&](const std::vector<float>& f) {
                auto v = [&](int yy, int xx) {
                    return f[static_cast<size_t>(yy) * src.width + xx];
                };
                return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) +
                       fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
            };
            dst.u_at(y, x) = static_cast<float>(2.0 * lerp(src.u));
            dst.v_at(y, x) = static_cast<float>(2.0 * lerp(src.v));
        }
}

}  // namespace

FlowField PyramidalLKFlow::estimate(const Frame& fa, const Frame& fb) const {
    if (fa.height != fb.height || fa.width != fb.width)
        throw std::runtime_error("classical flow: dimension mismatch");

    std::vector<Gray> pyr_a{to_gray(fa)}, pyr_b{to_gray(fb)};
    while (static_cast<int>(pyr_a.size()) < params_.max_levels &&
           std::min(pyr_a.back().h, pyr_a.back().w) >= 2 * params_.min_dim) {
        pyr_a.push_back(downsample(pyr_a.back()));
        pyr_b.push_back(downsample(pyr_b.back()));
    }

    FlowField flow(pyr_a.back().h, pyr_a.back().w);
    const int r = params_.window_radius;

    for (int level = static_cast<int>(pyr_a.size()) - 1; level >= 0; --level) {
        const Gray& a = pyr_a[level];
        const Gray& b = pyr_b[level];
        if (flow.height != a.h || flow.width != a.w) {
            FlowField up(a.h, a.w);
            resize_flow_2x(flow, up);
            flow = std::move(up);
        }

        const size_t n = static_cast<size_t>(a.h) * a.w;
        std::vector<double> ixx(n), ixy(n), iyy(n), ixt(n), iyt(n);
        const double max_step = 2.0 * r;

        for (int iter = 0; iter < params_.iterations_per_level; ++iter) {
            // Warp b by the current flow and form per-pixel normal-equation terms.
            for (int y = 0; y < a.h; ++y)
                for (int x = 0; x < a.w; ++x) {
                    const size_t i = static_cast<size_t>(y) * a.w + x;
                    const double px = x + flow.u_at(y, x);
                    const double py = y + flow.v_at(y, x);
                    float c, xm, xp, ym, yp;
                    const bool ok = sample_bilinear(b, px, py, c) &&
                                    sample_bilinear(b, px - 1, py, xm) &&
                                    sample_bilinear(b, px + 1, py, xp) &&
                                    sample_bilinear(b, px, py - 1, ym) &&
                                    sample_bilinear(b, px, py + 1, yp);
                    if (!ok) {
                        ixx[i] = ixy[i] = iyy[i] = ixt[i] = iyt[i] = 0.0;
                        continue;
                    }
                    const double gx = 0.5 * (xp - xm);
                    const double gy = 0.5 * (yp - ym);
                    const double rt = c - a.at(y, x);  // temporal residual
                    ixx[i] = gx * gx;
                    ixy[i] = gx * gy;
                    iyy[i] = gy * gy;
                    ixt[i] = gx * rt;
                    iyt[i] = gy * rt;
                }

            Integral sxx(a.h, a.w), sxy(a.h, a.w), syy(a.h, a.w), sxt(a.h, a.w),
                syt(a.h, a.w);
            sxx.build(ixx);
            sxy.build(ixy);
            syy.build(iyy);
            sxt.build(ixt);
            syt.build(iyt);

            for (int y = 0; y < a.h; ++y)
                for (int x = 0; x < a.w; ++x) {
                    const double axx = sxx.window(y, x, r) + params_.damping;
                    const double axy = sxy.window(y, x, r);
                    const double ayy = syy.window(y, x, r) + params_.damping;
                    const double bx = -sxt.window(y, x, r);
                    const double by = -syt.window(y, x, r);
                    const double det = axx * ayy - axy * axy;
                    if (det < 1e-12) continue;
                    double du = (ayy * bx - axy * by) / det;
                    double dv = (axx * by - axy * bx) / det;
                    du = std::clamp(du, -max_step, max_step);
                    dv = std::clamp(dv, -max_step, max_step);
                    flow.u_at(y, x) += static_cast<float>(du);
                    flow.v_at(y, x) += static_cast<float>(dv);
                }

            // Between-iteration regularization pulls poorly-conditioned
            // windows toward their neighborhood; later iterations re-refine.
            median3(flow.u, a.h, a.w);
            median3(flow.v, a.h, a.w);
        }
        if (level == 0) {
            median_filter(flow.u, a.h, a.w, 2);
            median_filter(flow.v, a.h, a.w, 2);
            box3(flow.u, a.h, a.w);
            box3(flow.v, a.h, a.w);
        }
    }
    return flow;
}

}  // namespace midframe
