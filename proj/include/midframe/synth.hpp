#pragma once

#include "midframe/core.hpp"

namespace midframe {

// Shaky-video generator with exact ground truth. Frames are windows into a
// large procedural texture (or a user image), moved by a smooth base path
// plus per-frame random jitter; every transform is recorded.
struct JitterSpec {
    int width = 320;
    int height = 180;
    int frame_count = 64;
    uint64_t seed = 7;
    double fps = 30.0;

    // base path
    double pan_x = 0.0, pan_y = 0.0;          // px per frame, linear pan
    double sway_amplitude = 0.0;              // px, sinusoidal sway on both axes
    int sway_bin = 2;                         // FFT bin of the sway

    // jitter
    double sigma = 4.0;                       // px, Gaussian per-frame translation
    double rotation_sigma_deg = 0.0;          // degrees, Gaussian per-frame rotation
    std::vector<int> jitter_bins;             // when non-empty: band-limited jitter,
    double jitter_bin_amplitude = 0.0;        //   sum of sinusoids at these bins

    // source
    std::string source_image;                 // optional; procedural texture if empty
    int texture_octaves = 4;
    bool sprite = false;                      // small moving sprite in the scene
    double sprite_speed = 1.5;                // source px per frame

    void validate() const;
};

struct GroundTruth {
    // Camera path as image-content displacement relative to frame 0
    // (what camera_path measures), plus per-frame poses.
    TrajectorySignal trajectory;
    std::vector<Affine2> poses;  // frame coords -> source coords
};

struct SynthResult {
    VideoSequence video;  // frames carry their pose
    GroundTruth gt;
};

SynthResult generate_jitter_video(const JitterSpec& spec);

// Trajectory-level reference for the stabilizer: per pass,
// y_i = (x_{i-s} + x_{i+s}) / 2 with s = effective_skip(i, n, skip);
// indices with s = 0 are copied. Applied `iterations` times (Jacobi).
TrajectorySignal midpoint_filter_reference(const TrajectorySignal& traj, int iterations,
                                           int skip);

// Frequency response of the interior midpoint filter:
// gain(w) = |cos(skip * w)|^iterations, sampled over [0, pi].
std::vector<std::pair<double, double>> filter_response_curve(int skip, int iterations,
                                                             int samples = 65);

// ---- serialization ----

// Key/value config file (one `key = value` per line, '#' comments).
JitterSpec load_jitter_spec(const std::string& path);
void save_jitter_spec(const JitterSpec& spec, const std::string& path);

// CSV: frame,tx,ty,theta
void save_ground_truth_csv(const GroundTruth& gt, const std::string& path);
TrajectorySignal load_trajectory_csv(const std::string& path);
void save_trajectory_csv(const TrajectorySignal& traj, const std::string& path);

void save_response_csv(const std::vector<std::pair<double, double>>& curve,
                       const std::string& path);

}  // namespace midframe
