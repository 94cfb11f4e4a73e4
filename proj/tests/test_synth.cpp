#include <doctest.h>

#include <filesystem>

#include "midframe/metrics.hpp"
#include "midframe/synth.hpp"
#include "test_util.hpp"

using namespace midframe;

TEST_CASE("generator is deterministic and in range") {
    JitterSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.frame_count = 8;
    spec.seed = 42;
    const SynthResult a = generate_jitter_video(spec);
    const SynthResult b = generate_jitter_video(spec);
    REQUIRE(a.video.size() == 8);
    for (size_t i = 0; i < 8; ++i) {
        CHECK(a.video.frames[i].data == b.video.frames[i].data);
        CHECK(a.video.frames[i].all_finite());
        REQUIRE(a.video.frames[i].pose.has_value());
        for (float v : a.video.frames[i].data) {
            CHECK(v >= 0.f);
            CHECK(v <= 1.f);
        }
    }
    spec.seed = 43;
    const SynthResult c = generate_jitter_video(spec);
    CHECK(a.video.frames[1].data != c.video.frames[1].data);
}

TEST_CASE("ground truth matches the measured camera path") {
    JitterSpec spec;
    spec.width = 96;
    spec.height = 64;
    spec.frame_count = 24;
    spec.sigma = 3.0;
    spec.seed = 5;
    const SynthResult r = generate_jitter_video(spec);
    const AnalyticOracleFlow oracle;
    const TrajectorySignal measured = camera_path(r.video, oracle);
    REQUIRE(measured.size() == r.gt.trajectory.size());
    for (size_t i = 0; i < measured.size(); ++i) {
        CHECK(measured.tx[i] == doctest::Approx(r.gt.trajectory.tx[i]).epsilon(1e-4));
        CHECK(measured.ty[i] == doctest::Approx(r.gt.trajectory.ty[i]).epsilon(1e-4));
    }
}

TEST_CASE("band-limited jitter concentrates energy at the requested bins") {
    JitterSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.frame_count = 64;
    spec.sigma = 0;
    spec.jitter_bins = {9, 11};
    spec.jitter_bin_amplitude = 3.0;
    spec.seed = 2;
    const SynthResult r = generate_jitter_video(spec);
    const auto energy = energy_spectrum(r.gt.trajectory.tx);
    double at_bins = energy[9] + energy[11];
    double total = 0;
    for (size_t k = 1; k < energy.size(); ++k) total += energy[k];
    CHECK(at_bins / total >= 0.999);
}

TEST_CASE("spec validation rejects unusable parameters") {
    JitterSpec spec;
    spec.frame_count = 1;
    expect_throw_contains([&] { spec.validate(); }, "at least 2 frames");
    spec.frame_count = 16;
    spec.jitter_bins = {9};  // > N/2
    expect_throw_contains([&] { spec.validate(); }, "jitter bin");
    spec.jitter_bins.clear();
    spec.sigma = -1;
    expect_throw_contains([&] { spec.validate(); }, "non-negative");
}

TEST_CASE("midpoint filter reference behaviour") {
    SUBCASE("single interior impulse averages to its neighbors") {
        TrajectorySignal t;
        t.push(0, 0, 0);
        t.push(2, 4, -2);
        t.push(0, 0, 0);
        const TrajectorySignal f = midpoint_filter_reference(t, 1, 1);
        CHECK(f.tx[1] == doctest::Approx(0.0));
        CHECK(f.ty[1] == doctest::Approx(0.0));
        CHECK(f.theta[1] == doctest::Approx(0.0));
        CHECK(f.tx[0] == doctest::Approx(0.0));
    }

    SUBCASE("endpoints and near-endpoints use the shrunk skip") {
        TrajectorySignal t;
        for (int i = 0; i < 7; ++i) t.push(i * i, 0, 0);
        const TrajectorySignal f = midpoint_filter_reference(t, 1, 2);
        CHECK(f.tx[0] == doctest::Approx(0.0));        // untouched
        CHECK(f.tx[1] == doctest::Approx(0.5 * (0 + 4)));   // skip shrinks to 1
        CHECK(f.tx[2] == doctest::Approx(0.5 * (0 + 16)));  // full skip 2
        CHECK(f.tx[6] == doctest::Approx(36.0));       // untouched
        CHECK(f.tx[5] == doctest::Approx(0.5 * (16 + 36)));
    }

    SUBCASE("interior gain matches |cos(s w)|^k on a sinusoid") {
        const int n = 256, bin = 10, skip = 2, iters = 3;
        TrajectorySignal t;
        for (int i = 0; i < n; ++i)
            t.push(std::sin(2 * M_PI * bin * i / n), 0, 0);
        const TrajectorySignal f = midpoint_filter_reference(t, iters, skip);
        const double w = 2 * M_PI * bin / n;
        const double gain = std::pow(std::cos(skip * w), iters);
        for (int i = 64; i < 192; ++i)  // away from boundary effects
            CHECK(f.tx[i] == doctest::Approx(gain * t.tx[i]).epsilon(1e-6));
    }
}

TEST_CASE("filter response curve endpoints and nulls") {
    const auto curve = filter_response_curve(2, 5, 65);
    REQUIRE(curve.size() == 65);
    CHECK(curve.front().second == doctest::Approx(1.0));  // DC passes
    // null of skip 2 at w = pi/4 (sample 16 of 65)
    CHECK(curve[16].second == doctest::Approx(0.0).epsilon(1e-9));
    // w = pi/2: |cos(pi)| = 1, the skip-2 blind spot
    CHECK(curve[32].second == doctest::Approx(1.0));
}

TEST_CASE("spec and trajectory serialization round-trips") {
    namespace fs = std::filesystem;
    JitterSpec spec;
    spec.width = 80;
    spec.sigma = 2.5;
    spec.jitter_bins = {4, 7};
    spec.jitter_bin_amplitude = 1.5;
    spec.sprite = true;
    const auto dir = fs::temp_directory_path();
    const std::string spath = (dir / "midframe_spec.cfg").string();
    save_jitter_spec(spec, spath);
    const JitterSpec back = load_jitter_spec(spath);
    CHECK(back.width == 80);
    CHECK(back.sigma == doctest::Approx(2.5));
    CHECK(back.jitter_bins == std::vector<int>{4, 7});
    CHECK(back.sprite);
    fs::remove(spath);

    TrajectorySignal t;
    t.push(1.5, -2.25, 0.001);
    t.push(0, 3, -0.5);
    const std::string tpath = (dir / "midframe_traj.csv").string();
    save_trajectory_csv(t, tpath);
    const TrajectorySignal rt = load_trajectory_csv(tpath);
    REQUIRE(rt.size() == 2);
    CHECK(rt.tx[0] == doctest::Approx(1.5));
    CHECK(rt.theta[1] == doctest::Approx(-0.5));
    fs::remove(tpath);

    expect_throw_contains([] { load_jitter_spec("/nonexistent.cfg"); }, "cannot open");
}
