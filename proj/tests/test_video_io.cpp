#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "midframe/video_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace midframe;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

VideoSequence random_video(int frames, int h, int w, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> uni(0.f, 1.f);
    VideoSequence v;
    for (int i = 0; i < frames; ++i) {
        Frame f(h, w, 3);
        for (float& x : f.data) x = uni(rng);
        v.frames.push_back(std::move(f));
    }
    return v;
}

}  // namespace

TEST_CASE("sequence round-trip stays within quantization error") {
    TempDir dir("midframe_io_roundtrip");
    const VideoSequence v = random_video(3, 17, 23, 42);
    CHECK(save_sequence(v, dir.path.string()) == 3);
    const VideoSequence r = load_sequence(dir.path.string());
    REQUIRE(r.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(r.frames[i].same_shape(v.frames[i]));
        for (size_t j = 0; j < v.frames[i].data.size(); ++j)
            CHECK(std::abs(r.frames[i].data[j] - v.frames[i].data[j]) <= 0.5f / 255.f + 1e-6f);
    }
}

TEST_CASE("frames are ordered by numeric stem, not lexically") {
    TempDir dir("midframe_io_order");
    VideoSequence v = random_video(3, 8, 8, 7);
    v.frames[0].data.assign(v.frames[0].data.size(), 0.f);
    v.frames[2].data.assign(v.frames[2].data.size(), 1.f);
    save_image(v.frames[2], (dir.path / "10.png").string());
    save_image(v.frames[1], (dir.path / "002.png").string());
    save_image(v.frames[0], (dir.path / "1.png").string());
    const VideoSequence r = load_sequence(dir.path.string());
    REQUIRE(r.size() == 3);
    CHECK(r.frames[0].at(0, 0, 0) == 0.f);
    CHECK(r.frames[2].at(0, 0, 0) == 1.f);
}

TEST_CASE("load errors name the problem") {
    expect_throw_contains([] { load_sequence("/nonexistent/path"); },
                          "/nonexistent/path");

    TempDir empty("midframe_io_empty");
    expect_throw_contains([&] { load_sequence(empty.path.string()); }, "no frames");

    TempDir bad("midframe_io_badfile");
    {
        std::ofstream f(bad.path / "000000.png");
        f << "not a png";
    }
    expect_throw_contains([&] { load_sequence(bad.path.string()); }, "000000.png");

    TempDir mixed("midframe_io_mixed");
    save_image(Frame(8, 8, 3), (mixed.path / "0.png").string());
    save_image(Frame(9, 8, 3), (mixed.path / "1.png").string());
    expect_throw_contains([&] { load_sequence(mixed.path.string()); }, "1.png");
}
