#include <doctest.h>

#include <filesystem>
#include <random>

#include "midframe/lk_flow.hpp"
#include "midframe/synth.hpp"
#include "test_util.hpp"

using namespace midframe;

namespace {

// Textured frame whose pixel values encode an affine view of a shared source,
// so warping results can be predicted in closed form.
Frame posed_frame(int h, int w, const Affine2& pose) {
    Frame f(h, w, 3);
    f.pose = pose;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sx, sy;
            pose.apply(x, y, sx, sy);
            f.at(0, y, x) = static_cast<float>(0.3 + 0.001 * sx);
            f.at(1, y, x) = static_cast<float>(0.3 + 0.001 * sy);
            f.at(2, y, x) = static_cast<float>(0.5 + 0.0005 * (sx + sy));
        }
    return f;
}

Frame textured(int h, int w, const Affine2& pose, uint64_t seed) {
    JitterSpec spec;
    spec.width = w + 64;
    spec.height = h + 64;
    spec.frame_count = 2;
    spec.sigma = 0;
    spec.seed = seed;
    Frame big = generate_jitter_video(spec).video.frames[0];
    Frame f(h, w, 3);
    f.pose = pose;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double sx, sy;
                pose.apply(x, y, sx, sy);
                float v;
                big.sample(c, sx + 24, sy + 24, v);
                f.at(c, y, x) = v;
            }
    return f;
}

// Tileable texture (integer-frequency sinusoid mix), so a circular shift of
// the image is an exact global translation with no seam.
Frame periodic_texture(int h, int w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> freq(1, 12);
    std::uniform_real_distribution<double> phase(0, 2 * M_PI), sign(-1, 1);
    Frame f(h, w, 3);
    for (int c = 0; c < 3; ++c) {
        struct Term {
            int fx, fy;
            double ph, amp;
        };
        std::vector<Term> terms;
        for (int k = 0; k < 24; ++k) {
            Term t{freq(rng) * (sign(rng) < 0 ? -1 : 1), freq(rng), phase(rng), 0};
            t.amp = 1.0 / std::sqrt(static_cast<double>(t.fx * t.fx + t.fy * t.fy));
            terms.push_back(t);
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0;
                for (const auto& t : terms)
                    s += t.amp * std::cos(2 * M_PI * (t.fx * static_cast<double>(x) / w +
                                                      t.fy * static_cast<double>(y) / h) +
                                          t.ph);
                f.at(c, y, x) = static_cast<float>(0.5 + 0.12 * s);
            }
    }
    for (auto& v : f.data) v = std::clamp(v, 0.f, 1.f);
    return f;
}

}  // namespace

TEST_CASE("oracle flow reproduces the relative transform") {
    const AnalyticOracleFlow oracle;
    const Frame a = posed_frame(12, 16, Affine2::translation(10, 20));
    const Frame b = posed_frame(12, 16, Affine2::translation(5, 22));

    // content of b is content of a moved by a.t - b.t = (+5, -2)
    const FlowField f = estimate_flow(oracle, a, b);
    CHECK(f.u_at(3, 4) == doctest::Approx(5));
    CHECK(f.v_at(3, 4) == doctest::Approx(-2));
    REQUIRE(f.parametric.has_value());

    const FlowField zero = estimate_flow(oracle, a, a);
    CHECK(zero.u_at(7, 9) == doctest::Approx(0));
    CHECK(zero.v_at(7, 9) == doctest::Approx(0));

    Frame unposed(12, 16, 3);
    expect_throw_contains([&] { estimate_flow(oracle, a, unposed); }, "pose");
}

TEST_CASE("backward warp moves content and flags holes") {
    Frame src(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) src.at(0, y, x) = static_cast<float>(10 * y + x) / 80.f;

    const FlowField flow = FlowField::from_transform(Affine2::translation(2, 1), 8, 8);
    const WarpResult r = backward_warp(src, flow, 1.0);
    // out(p) = src(p + (2,1))
    CHECK(r.frame.at(0, 0, 0) == doctest::Approx(src.at(0, 1, 2)));
    CHECK(r.frame.at(0, 3, 4) == doctest::Approx(src.at(0, 4, 6)));
    CHECK(r.mask.at(0, 0) == 1);
    CHECK(r.mask.at(7, 7) == 0);   // samples (9,8): outside
    CHECK(r.frame.at(0, 7, 7) == 0.f);

    // half scale: out(2,2) samples src at (3, 2.5)
    const WarpResult half = backward_warp(src, flow, 0.5);
    CHECK(half.frame.at(0, 2, 2) ==
          doctest::Approx(0.5f * (src.at(0, 2, 3) + src.at(0, 3, 3))));
    const WarpResult ident = backward_warp(src, flow, 0.0);
    CHECK(ident.frame.at(0, 5, 5) == src.at(0, 5, 5));
}

TEST_CASE("backward warp propagates poses through parametric flows") {
    const Affine2 pose_a = Affine2::translation(10, 0);
    const Affine2 pose_b = Affine2::translation(4, 6);
    const Frame a = posed_frame(16, 16, pose_a);
    const Frame b = posed_frame(16, 16, pose_b);

    const AnalyticOracleFlow oracle;
    // Warp b halfway toward a: expected pose is the midpoint translation.
    const FlowField f = estimate_flow(oracle, a, b);
    const WarpResult r = backward_warp(b, f, 0.5);
    REQUIRE(r.frame.pose.has_value());
    CHECK(r.frame.pose->approx_equal(Affine2::translation(7, 3), 1e-9));

    // And the warped content matches the pose exactly on valid pixels.
    const Frame expected = posed_frame(16, 16, *r.frame.pose);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if (r.mask.at(y, x))
                CHECK(r.frame.at(0, y, x) ==
                      doctest::Approx(expected.at(0, y, x)).epsilon(1e-4));
}

TEST_CASE("halfway pair lands both neighbors on the midpoint") {
    const AnalyticOracleFlow oracle;
    const Frame prev = posed_frame(16, 16, Affine2::translation(0, 0));
    const Frame next = posed_frame(16, 16, Affine2::translation(8, 2));
    const HalfwayPair pair = halfway_pair(oracle, prev, next);
    REQUIRE(pair.f_minus.pose.has_value());
    REQUIRE(pair.f_plus.pose.has_value());
    CHECK(pair.f_minus.pose->approx_equal(Affine2::translation(4, 1), 1e-9));
    CHECK(pair.f_plus.pose->approx_equal(Affine2::translation(4, 1), 1e-9));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if (pair.mask_minus.at(y, x) && pair.mask_plus.at(y, x))
                CHECK(pair.f_minus.at(1, y, x) ==
                      doctest::Approx(pair.f_plus.at(1, y, x)).epsilon(1e-4));
}

TEST_CASE("flow dump round-trip") {
    FlowField f(5, 7);
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> uni(-10.f, 10.f);
    for (auto& u : f.u) u = uni(rng);
    for (auto& v : f.v) v = uni(rng);
    const auto path = (std::filesystem::temp_directory_path() / "midframe_flow.bin").string();
    write_flow_dump(f, path);
    const FlowField r = read_flow_dump(path);
    CHECK(r.height == 5);
    CHECK(r.width == 7);
    CHECK(r.u == f.u);
    CHECK(r.v == f.v);
    std::filesystem::remove(path);
    expect_throw_contains([&] { read_flow_dump(path); }, "cannot open");
}

TEST_CASE("pyramidal LK recovers global translation") {
    const PyramidalLKFlow lk;
    const Frame a = textured(96, 128, Affine2::identity(), 11);

    SUBCASE("zero motion") {
        const FlowField f = estimate_flow(lk, a, a);
        double max_mag = 0;
        for (size_t i = 0; i < f.u.size(); ++i)
            max_mag = std::max(max_mag, std::hypot((double)f.u[i], (double)f.v[i]));
        CHECK(max_mag <= 0.1);
    }

    SUBCASE("5px translation of periodic content, central region") {
        // circularly shifted tileable texture: exact global translation, no
        // seam; with a(p) = b(p + F(p)) and b = a shifted right by 5, F = (+5, 0)
        const Frame tex = periodic_texture(96, 128, 11);
        auto shifted = [&](int shift) {
            Frame f(96, 128, 3);
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < 96; ++y)
                    for (int x = 0; x < 128; ++x)
                        f.at(c, y, x) = tex.at(c, y, ((x - shift) % 128 + 128) % 128);
            return f;
        };
        const Frame pa = shifted(0);
        const Frame b = shifted(5);
        const FlowField f = estimate_flow(lk, pa, b);
        double worst = 0;
        for (int y = 10; y < 86; ++y)
            for (int x = 13; x < 115; ++x) {
                const double e = std::hypot(f.u_at(y, x) - 5.0, f.v_at(y, x) - 0.0);
                worst = std::max(worst, e);
            }
        CHECK(worst <= 0.5);
    }

    SUBCASE("small affine motion") {
        Affine2 t;  // slight rotation + shift
        const double th = 1.0 * M_PI / 180.0;
        t.m00 = std::cos(th);
        t.m01 = -std::sin(th);
        t.m10 = std::sin(th);
        t.m11 = std::cos(th);
        t.tx = 2.0;
        t.ty = -1.5;
        const Frame b = textured(96, 128, t.inverse(), 11);
        const FlowField f = estimate_flow(lk, a, b);
        double worst = 0;
        for (int y = 10; y < 86; ++y)
            for (int x = 13; x < 115; ++x) {
                double gx, gy;
                t.apply(x, y, gx, gy);
                const double e = std::hypot(f.u_at(y, x) - (gx - x), f.v_at(y, x) - (gy - y));
                worst = std::max(worst, e);
            }
        CHECK(worst <= 1.0);
    }
}
