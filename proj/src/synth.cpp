#include "midframe/synth.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "midframe/video_io.hpp"

namespace midframe {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Multi-octave value noise, values in roughly [0.1, 0.9].
Frame make_texture(int height, int width, int octaves, uint64_t seed) {
    Frame tex(height, width, 3, 0.5f);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double amplitude = 0.4;
    int cell = 48;
    for (int o = 0; o < octaves; ++o) {
        const int gw = width / cell + 2;
        const int gh = height / cell + 2;
        std::vector<float> lattice(static_cast<size_t>(3) * gh * gw);
        for (float& v : lattice) v = static_cast<float>(uni(rng));
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < height; ++y) {
                const int gy = y / cell;
                const double fy = smoothstep(static_cast<double>(y % cell) / cell);
                for (int x = 0; x < width; ++x) {
                    const int gx = x / cell;
                    const double fx = smoothstep(static_cast<double>(x % cell) / cell);
                    const size_t base = (static_cast<size_t>(c) * gh + gy) * gw + gx;
                    const double v00 = lattice[base], v01 = lattice[base + 1];
                    const double v10 = lattice[base + gw], v11 = lattice[base + gw + 1];
                    tex.at(c, y, x) += static_cast<float>(
                        amplitude * ((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                     fy * ((1 - fx) * v10 + fx * v11)));
                }
            }
        amplitude *= 0.55;
        cell = std::max(3, cell / 2);
    }
    tex.clamp01();
    return tex;
}

void draw_sprite(Frame& frame, double cx, double cy, double radius) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - 3 * radius)));
    const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + 3 * radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - 3 * radius)));
    const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + 3 * radius)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const float w = static_cast<float>(std::exp(-d2 / (2 * radius * radius)));
            frame.at(0, y, x) = frame.at(0, y, x) * (1 - w) + 0.95f * w;
            frame.at(1, y, x) = frame.at(1, y, x) * (1 - w) + 0.85f * w;
            frame.at(2, y, x) = frame.at(2, y, x) * (1 - w) + 0.15f * w;
        }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void JitterSpec::validate() const {
    if (width < 16 || height < 16)
        throw std::runtime_error("jitter spec: frame size must be at least 16x16");
    if (frame_count < 2) throw std::runtime_error("jitter spec: need at least 2 frames");
    if (sigma < 0 || rotation_sigma_deg < 0 || sway_amplitude < 0 ||
        jitter_bin_amplitude < 0)
        throw std::runtime_error("jitter spec: amplitudes must be non-negative");
    if (texture_octaves < 1 || texture_octaves > 8)
        throw std::runtime_error("jitter spec: texture_octaves out of range");
    for (int b : jitter_bins)
        if (b < 1 || b > frame_count / 2)
            throw std::runtime_error("jitter spec: jitter bin outside [1, N/2]");
    if (sway_amplitude > 0 && (sway_bin < 1 || sway_bin > frame_count / 2))
        throw std::runtime_error("jitter spec: sway bin outside [1, N/2]");
}

SynthResult generate_jitter_video(const JitterSpec& spec) {
    spec.validate();
    const int n = spec.frame_count;

    // Camera center path in source coordinates and per-frame rotation.
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

    std::vector<double> phases(2 * spec.jitter_bins.size());
    for (double& p : phases) p = phase(rng);

    std::vector<double> cx(n), cy(n), theta(n);
    for (int i = 0; i < n; ++i) {
        cx[i] = spec.pan_x * i;
        cy[i] = spec.pan_y * i;
        if (spec.sway_amplitude > 0) {
            const double w = 2.0 * M_PI * spec.sway_bin * i / n;
            cx[i] += spec.sway_amplitude * std::sin(w);
            cy[i] += spec.sway_amplitude * std::cos(w);
        }
        if (!spec.jitter_bins.empty()) {
            for (size_t k = 0; k < spec.jitter_bins.size(); ++k) {
                const double w = 2.0 * M_PI * spec.jitter_bins[k] * i / n;
                cx[i] += spec.jitter_bin_amplitude * std::sin(w + phases[2 * k]);
                cy[i] += spec.jitter_bin_amplitude * std::sin(w + phases[2 * k + 1]);
            }
        } else if (spec.sigma > 0) {
            cx[i] += spec.sigma * gauss(rng);
            cy[i] += spec.sigma * gauss(rng);
        }
        theta[i] = spec.rotation_sigma_deg > 0
                       ? spec.rotation_sigma_deg * M_PI / 180.0 * gauss(rng)
                       : 0.0;
    }

    // Poses map frame coords to source coords: rotate about the frame center,
    // then place the center at (cx, cy).
    const double fcx = (spec.width - 1) / 2.0;
    const double fcy = (spec.height - 1) / 2.0;
    std::vector<Affine2> poses(n);
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(theta[i]), s = std::sin(theta[i]);
        Affine2& p = poses[i];
        p.m00 = c;
        p.m01 = -s;
        p.m10 = s;
        p.m11 = c;
        p.tx = cx[i] - (c * fcx - s * fcy);
        p.ty = cy[i] - (s * fcx + c * fcy);
    }

    // Size the source so every frame corner lands inside it with padding.
    double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
    const double corners[4][2] = {{0, 0},
                                  {spec.width - 1.0, 0},
                                  {0, spec.height - 1.0},
                                  {spec.width - 1.0, spec.height - 1.0}};
    for (const auto& p : poses)
        for (const auto& corner : corners) {
            double ox, oy;
            p.apply(corner[0], corner[1], ox, oy);
            minx = std::min(minx, ox);
            maxx = std::max(maxx, ox);
            miny = std::min(miny, oy);
            maxy = std::max(maxy, oy);
        }
    const double pad = 4.0;
    for (auto& p : poses) {
        p.tx += pad - minx;
        p.ty += pad - miny;
    }
    const int sw = static_cast<int>(std::ceil(maxx - minx)) + 2 * static_cast<int>(pad) + 2;
    const int sh = static_cast<int>(std::ceil(maxy - miny)) + 2 * static_cast<int>(pad) + 2;

    Frame source;
    if (!spec.source_image.empty()) {
        source = load_image(spec.source_image);
        if (source.width < sw || source.height < sh)
            throw std::runtime_error("jitter spec: source image too small (need " +
                                     std::to_string(sw) + "x" + std::to_string(sh) + ")");
    } else {
        source = make_texture(sh, sw, spec.texture_octaves, spec.seed ^ 0x9e3779b97f4a7c15ull);
    }

    SynthResult result;
    result.video.fps = spec.fps;
    result.gt.poses = poses;
    for (int i = 0; i < n; ++i) {
        Frame frame(spec.height, spec.width, 3);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                double ox, oy;
                poses[i].apply(x, y, ox, oy);
                for (int c = 0; c < 3; ++c) {
                    float v;
                    if (!source.sample(c, ox, oy, v))
                        throw std::runtime_error(
                            "generate_jitter_video: frame window left the source");
                    frame.at(c, y, x) = v;
                }
            }
        if (spec.sprite) {
            // A dot moving diagonally through source space, drawn in frame coords.
            const double sx = pad + 0.2 * sw + spec.sprite_speed * i;
            const double sy = pad + 0.3 * sh + 0.6 * spec.sprite_speed * i;
            const Affine2 inv = poses[i].inverse();
            double px, py;
            inv.apply(sx, sy, px, py);
            draw_sprite(frame, px, py, 3.0);
        }
        frame.pose = poses[i];
        result.video.frames.push_back(std::move(frame));
        // Content displacement of frame i relative to frame 0.
        result.gt.trajectory.push(cx[0] - cx[i], cy[0] - cy[i], theta[0] - theta[i]);
    }
    return result;
}

TrajectorySignal midpoint_filter_reference(const TrajectorySignal& traj, int iterations,
                                           int skip) {
    if (iterations < 0 || skip < 1)
        throw std::runtime_error("midpoint_filter_reference: bad parameters");
    const int n = static_cast<int>(traj.size());
    TrajectorySignal cur = traj;
    for (int it = 0; it < iterations; ++it) {
        TrajectorySignal next = cur;
        for (int i = 0; i < n; ++i) {
            const int s = std::min({skip, i, n - 1 - i});
            if (s == 0) continue;
            next.tx[i] = 0.5 * (cur.tx[i - s] + cur.tx[i + s]);
            next.ty[i] = 0.5 * (cur.ty[i - s] + cur.ty[i + s]);
            next.theta[i] = 0.5 * (cur.theta[i - s] + cur.theta[i + s]);
        }
        cur = std::move(next);
    }
    return cur;
}

std::vector<std::pair<double, double>> filter_response_curve(int skip, int iterations,
                                                             int samples) {
    if (samples < 2) throw std::runtime_error("filter_response_curve: need >= 2 samples");
    std::vector<std::pair<double, double>> curve;
    for (int k = 0; k < samples; ++k) {
        const double w = M_PI * k / (samples - 1);
        curve.emplace_back(w, std::pow(std::abs(std::cos(skip * w)), iterations));
    }
    return curve;
}

JitterSpec load_jitter_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open jitter spec: " + path);
    JitterSpec spec;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "width") spec.width = std::stoi(value);
            else if (key == "height") spec.height = std::stoi(value);
            else if (key == "frame_count") spec.frame_count = std::stoi(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "fps") spec.fps = std::stod(value);
            else if (key == "pan_x") spec.pan_x = std::stod(value);
            else if (key == "pan_y") spec.pan_y = std::stod(value);
            else if (key == "sway_amplitude") spec.sway_amplitude = std::stod(value);
            else if (key == "sway_bin") spec.sway_bin = std::stoi(value);
            else if (key == "sigma") spec.sigma = std::stod(value);
            else if (key == "rotation_sigma_deg") spec.rotation_sigma_deg = std::stod(value);
            else if (key == "jitter_bin_amplitude") spec.jitter_bin_amplitude = std::stod(value);
            else if (key == "jitter_bins") {
                spec.jitter_bins.clear();
                std::stringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!trim(tok).empty()) spec.jitter_bins.push_back(std::stoi(trim(tok)));
            } else if (key == "source_image") spec.source_image = value;
            else if (key == "texture_octaves") spec.texture_octaves = std::stoi(value);
            else if (key == "sprite") spec.sprite = (value == "1" || value == "true");
            else if (key == "sprite_speed") spec.sprite_speed = std::stod(value);
            else
                throw std::runtime_error("unknown key `" + key + "`");
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": bad value for `" + key + "`");
        }
    }
    spec.validate();
    return spec;
}

void save_jitter_spec(const JitterSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write jitter spec: " + path);
    out << "width = " << spec.width << "\nheight = " << spec.height
        << "\nframe_count = " << spec.frame_count << "\nseed = " << spec.seed
        << "\nfps = " << spec.fps << "\npan_x = " << spec.pan_x
        << "\npan_y = " << spec.pan_y << "\nsway_amplitude = " << spec.sway_amplitude
        << "\nsway_bin = " << spec.sway_bin << "\nsigma = " << spec.sigma
        << "\nrotation_sigma_deg = " << spec.rotation_sigma_deg
        << "\njitter_bin_amplitude = " << spec.jitter_bin_amplitude << "\njitter_bins = ";
    for (size_t i = 0; i < spec.jitter_bins.size(); ++i)
        out << (i ? "," : "") << spec.jitter_bins[i];
    out << "\nsource_image = " << spec.source_image
        << "\ntexture_octaves = " << spec.texture_octaves
        << "\nsprite = " << (spec.sprite ? 1 : 0)
        << "\nsprite_speed = " << spec.sprite_speed << "\n";
}

void save_ground_truth_csv(const GroundTruth& gt, const std::string& path) {
    save_trajectory_csv(gt.trajectory, path);
}

void save_trajectory_csv(const TrajectorySignal& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory csv: " + path);
    out << "frame,tx,ty,theta\n";
    out.precision(12);
    for (size_t i = 0; i < traj.size(); ++i)
        out << i << "," << traj.tx[i] << "," << traj.ty[i] << "," << traj.theta[i] << "\n";
}

TrajectorySignal load_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory csv: " + path);
    TrajectorySignal traj;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        double vals[4];
        for (int k = 0; k < 4; ++k) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("trajectory csv: malformed row in " + path);
            vals[k] = std::stod(tok);
        }
        traj.push(vals[1], vals[2], vals[3]);
    }
    return traj;
}

void save_response_csv(const std::vector<std::pair<double, double>>& curve,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write response csv: " + path);
    out << "omega,gain\n";
    out.precision(12);
    for (const auto& [w, g] : curve) out << w << "," << g << "\n";
}

}  // namespace midframe
