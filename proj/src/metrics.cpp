#include "midframe/metrics.hpp"

#include <iostream>
#include <nlohmann/json.hpp>

namespace midframe {

namespace {

PerFrameMetric frame_metric(int index, const Frame& a, const Frame& b,
                            const FlowEstimator& est) {
    PerFrameMetric m;
    m.frame = index;
    try {
        const Homography h = fit_homography(a, b, est);
        const Eigen::Matrix2d aff = affine_block(h);
        const Eigen::JacobiSVD<Eigen::Matrix2d> svd(aff);
        m.scale = 0.5 * (svd.singularValues()(0) + svd.singularValues()(1));
        const Eigen::EigenSolver<Eigen::Matrix2d> eig(aff);
        const double l0 = std::abs(eig.eigenvalues()(0));
        const double l1 = std::abs(eig.eigenvalues()(1));
        m.anisotropy = std::min(l0, l1) / std::max(l0, l1);
    } catch (const DegenerateHomography&) {
        m.degenerate = true;
    }
    return m;
}

void check_lengths(const VideoSequence& input, const VideoSequence& output) {
    if (input.size() != output.size())
        throw std::runtime_error("metrics: input/output lengths differ");
    if (input.empty()) throw std::runtime_error("metrics: empty video");
}

}  // namespace

double cropping_ratio(const VideoSequence& input, const VideoSequence& output,
                      const FlowEstimator& est) {
    check_lengths(input, output);
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < input.size(); ++i) {
        const PerFrameMetric m =
            frame_metric(static_cast<int>(i), input.frames[i], output.frames[i], est);
        if (m.degenerate) {
            std::cerr << "cropping_ratio: degenerate fit at frame " << i << ", skipped\n";
            continue;
        }
        // An enlarged (cropped) output fits with scale > 1; remaining area is 1/scale.
        sum += std::min(1.0, 1.0 / m.scale);
        ++n;
    }
    if (n == 0) throw std::runtime_error("cropping_ratio: all frames degenerate");
    return sum / static_cast<double>(n);
}

double distortion_value(const VideoSequence& input, const VideoSequence& output,
                        const FlowEstimator& est) {
    check_lengths(input, output);
    double worst = 1.0;
    size_t n = 0;
    for (size_t i = 0; i < input.size(); ++i) {
        const PerFrameMetric m =
            frame_metric(static_cast<int>(i), input.frames[i], output.frames[i], est);
        if (m.degenerate) {
            std::cerr << "distortion_value: degenerate fit at frame " << i << ", skipped\n";
            continue;
        }
        worst = std::min(worst, m.anisotropy);
        ++n;
    }
    if (n == 0) throw std::runtime_error("distortion_value: all frames degenerate");
    return worst;
}

TrajectorySignal camera_path(const VideoSequence& video, const FlowEstimator& est) {
    if (video.size() < 2) throw std::runtime_error("camera_path: need >= 2 frames");
    TrajectorySignal path;
    path.push(0, 0, 0);
    const double cx = (video.frames[0].width - 1) / 2.0;
    const double cy = (video.frames[0].height - 1) / 2.0;
    double dx = 0, dy = 0, dth = 0;  // previous step, reused for degenerate fits
    for (size_t i = 1; i < video.size(); ++i) {
        try {
            const Homography h =
                fit_homography(video.frames[i - 1], video.frames[i], est);
            const Eigen::Vector3d q = h * Eigen::Vector3d(cx, cy, 1.0);
            dx = q.x() / q.z() - cx;
            dy = q.y() / q.z() - cy;
            const Eigen::Matrix2d aff = affine_block(h);
            dth = std::atan2(aff(1, 0), aff(0, 0));
        } catch (const DegenerateHomography&) {
            std::cerr << "camera_path: degenerate fit at step " << i
                      << ", reusing previous step\n";
        }
        path.push(path.tx.back() + dx, path.ty.back() + dy, path.theta.back() + dth);
    }
    return path;
}

std::vector<double> energy_spectrum(const std::vector<double>& signal) {
    const size_t n = signal.size();
    std::vector<double> energy(n / 2 + 1, 0.0);
    for (size_t k = 0; k <= n / 2; ++k) {
        double re = 0, im = 0;
        for (size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k * t) / n;
            re += signal[t] * std::cos(ang);
            im += signal[t] * std::sin(ang);
        }
        energy[k] = re * re + im * im;
    }
    return energy;
}

double stability_score_signal(const std::vector<double>& signal) {
    if (signal.size() < 16)
        throw std::runtime_error("stability_score: need >= 16 samples");
    const auto energy = energy_spectrum(signal);
    double low = 0, all = 0;
    for (size_t k = 2; k < energy.size(); ++k) {
        all += energy[k];
        if (k <= 6) low += energy[k];
    }
    if (all < 1e-12) return 1.0;  // constant signal convention
    return low / all;
}

double stability_score_from_path(const TrajectorySignal& path) {
    const double sx = stability_score_signal(path.tx);
    const double sy = stability_score_signal(path.ty);
    const double st = stability_score_signal(path.theta);
    return std::min({sx, sy, st});
}

double stability_score(const VideoSequence& video, const FlowEstimator& est) {
    if (video.size() < 16)
        throw std::runtime_error("stability_score: video too short (< 16 frames)");
    return stability_score_from_path(camera_path(video, est));
}

MetricReport evaluate_metrics(const VideoSequence& input, const VideoSequence& output,
                              const FlowEstimator& est) {
    check_lengths(input, output);
    MetricReport report;
    double scale_sum = 0;
    size_t ok = 0;
    double worst = 1.0;
    for (size_t i = 0; i < input.size(); ++i) {
        PerFrameMetric m =
            frame_metric(static_cast<int>(i), input.frames[i], output.frames[i], est);
        if (!m.degenerate) {
            scale_sum += std::min(1.0, 1.0 / m.scale);
            worst = std::min(worst, m.anisotropy);
            ++ok;
        }
        report.per_frame.push_back(m);
    }
    if (ok == 0) throw std::runtime_error("evaluate_metrics: all frames degenerate");
    report.cropping_ratio = scale_sum / static_cast<double>(ok);
    report.distortion_value = worst;
    report.stability_score = stability_score(output, est);
    return report;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["cropping_ratio"] = cropping_ratio;
    j["distortion_value"] = distortion_value;
    j["stability_score"] = stability_score;
    j["per_frame"] = nlohmann::json::array();
    for (const auto& m : per_frame)
        j["per_frame"].push_back({{"frame", m.frame},
                                  {"scale", m.scale},
                                  {"anisotropy", m.anisotropy},
                                  {"degenerate", m.degenerate}});
    return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    MetricReport r;
    r.cropping_ratio = j.at("cropping_ratio").get<double>();
    r.distortion_value = j.at("distortion_value").get<double>();
    r.stability_score = j.at("stability_score").get<double>();
    for (const auto& e : j.value("per_frame", nlohmann::json::array())) {
        PerFrameMetric m;
        m.frame = e.at("frame").get<int>();
        m.scale = e.at("scale").get<double>();
        m.anisotropy = e.at("anisotropy").get<double>();
        m.degenerate = e.at("degenerate").get<bool>();
        r.per_frame.push_back(m);
    }
    return r;
}

}  // namespace midframe
