#pragma once

#include "midframe/homography.hpp"

namespace midframe {

struct PerFrameMetric {
    int frame = 0;
    double scale = 1.0;       // mean singular value of the affine block
    double anisotropy = 1.0;  // eigenvalue-magnitude ratio, in (0, 1]
    bool degenerate = false;
};

struct MetricReport {
    double cropping_ratio = 1.0;
    double distortion_value = 1.0;
    double stability_score = 1.0;
    std::vector<PerFrameMetric> per_frame;

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
};

// Average scale component of input->output homographies, reported as the
// remaining image-area fraction in (0, 1]. 1.0 means no content lost.
double cropping_ratio(const VideoSequence& input, const VideoSequence& output,
                      const FlowEstimator& est);

// Worst-case anisotropy of the affine part across frames, in (0, 1].
double distortion_value(const VideoSequence& input, const VideoSequence& output,
                        const FlowEstimator& est);

// Accumulated camera path from consecutive-frame homographies. Translation is
// evaluated at the frame center; the first sample is (0, 0, 0). Degenerate
// fits reuse the previous step (logged to stderr).
TrajectorySignal camera_path(const VideoSequence& video, const FlowEstimator& est);

// Fraction of spectral energy in bins 2..6 relative to all energy in bins
// 2..N/2 (DC excluded), minimized over the tx/ty/theta signals. A constant
// signal scores 1.0 by convention. Requires >= 16 frames.
double stability_score(const VideoSequence& video, const FlowEstimator& est);

// Same score computed from an explicit camera path.
double stability_score_from_path(const TrajectorySignal& path);

double stability_score_signal(const std::vector<double>& signal);

// All three metrics plus per-frame diagnostics.
MetricReport evaluate_metrics(const VideoSequence& input, const VideoSequence& output,
                              const FlowEstimator& est);

// One-sided energy spectrum |X_k|^2 for k = 0..N/2 (direct DFT).
std::vector<double> energy_spectrum(const std::vector<double>& signal);

}  // namespace midframe
