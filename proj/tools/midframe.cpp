#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "midframe/adapter_flow.hpp"
#include "midframe/checkpoint.hpp"
#include "midframe/lk_flow.hpp"
#include "midframe/metrics.hpp"
#include "midframe/stabilizer.hpp"
#include "midframe/synth.hpp"
#include "midframe/training.hpp"
#include "midframe/video_io.hpp"

namespace fs = std::filesystem;
using namespace midframe;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitPipeline = 4;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rebuilds frame poses from a trajectory CSV (content displacement relative
// to frame 0). For translation-only trajectories this differs from the
// generator's poses only by a constant offset, which cancels in every
// relative-flow query; with rotation it is a small-angle approximation.
void attach_poses(VideoSequence& video, const TrajectorySignal& traj) {
    if (traj.size() != video.size())
        throw std::runtime_error("trajectory length does not match frame count");
    for (size_t i = 0; i < video.size(); ++i) {
        Frame& f = video.frames[i];
        const double fcx = (f.width - 1) / 2.0;
        const double fcy = (f.height - 1) / 2.0;
        const double th = -traj.theta[i];
        const double c = std::cos(th), s = std::sin(th);
        Affine2 p{c, -s, s, c, 0, 0};
        p.tx = -traj.tx[i] - (c * fcx - s * fcy) + fcx;
        p.ty = -traj.ty[i] - (s * fcx + c * fcy) + fcy;
        f.pose = p;
    }
}

struct EstimatorOptions {
    std::string kind = "classical";
    std::string flow_weights;
    std::string trajectory;
};

void add_estimator_options(CLI::App* cmd, EstimatorOptions& opts) {
    cmd->add_option("--estimator", opts.kind, "Flow estimator: classical, oracle, adapter")
        ->check(CLI::IsMember({"classical", "oracle", "adapter"}))
        ->capture_default_str();
    cmd->add_option("--flow-weights", opts.flow_weights,
                    "Weight file for --estimator adapter");
    cmd->add_option("--trajectory", opts.trajectory,
                    "Ground-truth trajectory CSV; required by --estimator oracle "
                    "when frames come from disk");
}

std::unique_ptr<FlowEstimator> make_estimator(const EstimatorOptions& opts,
                                              VideoSequence* video) {
    if (opts.kind == "oracle") {
        if (!opts.trajectory.empty() && video)
            attach_poses(*video, load_trajectory_csv(opts.trajectory));
        return std::make_unique<AnalyticOracleFlow>();
    }
    if (opts.kind == "adapter") {
        if (opts.flow_weights.empty())
            throw IoError("--estimator adapter requires --flow-weights");
        if (!fs::is_regular_file(opts.flow_weights))
            throw IoError("flow weight file not found: " + opts.flow_weights);
        return std::make_unique<LearnedFlowAdapter>(opts.flow_weights);
    }
    return std::make_unique<PyramidalLKFlow>();
}

VideoSequence load_input(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir);
    try {
        return load_sequence(dir);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        out << text;
        if (!out) throw IoError("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

int run_synth(const std::string& spec_path, const JitterSpec& flags_spec,
              const std::string& out_dir, const std::string& gt_path) {
    JitterSpec spec = flags_spec;
    if (!spec_path.empty()) {
        if (!fs::is_regular_file(spec_path)) throw IoError("no such file: " + spec_path);
        spec = load_jitter_spec(spec_path);
    }
    const SynthResult result = generate_jitter_video(spec);
    try {
        save_sequence(result.video, out_dir);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
    if (!gt_path.empty()) save_ground_truth_csv(result.gt, gt_path);
    std::cerr << "wrote " << result.video.size() << " frames to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"midframe: iterative frame-interpolation video stabilizer"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a shaky clip with ground truth");
    std::string synth_spec, synth_out, synth_gt;
    JitterSpec js;
    synth->add_option("--spec", synth_spec, "Jitter spec file (overrides flags)");
    synth->add_option("--out", synth_out, "Output frame directory")->required();
    synth->add_option("--gt", synth_gt, "Ground-truth trajectory CSV path");
    synth->add_option("--width", js.width)->capture_default_str();
    synth->add_option("--height", js.height)->capture_default_str();
    synth->add_option("--frames", js.frame_count)->capture_default_str();
    synth->add_option("--seed", js.seed)->capture_default_str();
    synth->add_option("--sigma", js.sigma, "Jitter translation sigma (px)")
        ->capture_default_str();
    synth->add_option("--rotation-sigma", js.rotation_sigma_deg,
                      "Jitter rotation sigma (deg)")->capture_default_str();
    synth->add_option("--pan-x", js.pan_x)->capture_default_str();
    synth->add_option("--pan-y", js.pan_y)->capture_default_str();
    synth->add_option("--sway-amplitude", js.sway_amplitude)->capture_default_str();
    synth->add_option("--sway-bin", js.sway_bin)->capture_default_str();
    synth->add_option("--jitter-bins", js.jitter_bins,
                      "Band-limited jitter bins (replaces Gaussian jitter)");
    synth->add_option("--jitter-bin-amplitude", js.jitter_bin_amplitude)
        ->capture_default_str();
    synth->add_option("--source-image", js.source_image,
                      "Backdrop image instead of procedural texture");
    synth->add_flag("--sprite", js.sprite, "Add a moving sprite");

    // ---- stabilize ----
    auto* stab = app.add_subcommand("stabilize", "Stabilize a frame sequence");
    std::string stab_in, stab_out, stab_checkpoint, stab_report;
    StabilizeConfig stab_cfg;
    EstimatorOptions stab_est;
    bool bypass_fusion = false;
    stab->add_option("--in", stab_in, "Input frame directory")->required();
    stab->add_option("--out", stab_out, "Output frame directory")->required();
    stab->add_option("--iterations", stab_cfg.iterations)->capture_default_str();
    stab->add_option("--skip", stab_cfg.skip)->capture_default_str();
    stab->add_option("--jobs", stab_cfg.jobs)->capture_default_str();
    stab->add_option("--checkpoint", stab_checkpoint, "Trained network checkpoint");
    stab->add_flag("--bypass-fusion", bypass_fusion,
                   "Use the network-free averaging engine");
    stab->add_option("--report", stab_report, "Write a metrics JSON report");
    add_estimator_options(stab, stab_est);

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Metrics for a stabilized sequence");
    std::string eval_in, eval_stab, eval_report;
    EstimatorOptions eval_est;
    eval->add_option("--in", eval_in, "Original frame directory")->required();
    eval->add_option("--stabilized", eval_stab, "Stabilized frame directory")->required();
    eval->add_option("--report", eval_report, "Metrics JSON output path");
    add_estimator_options(eval, eval_est);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train the fusion/refinement nets");
    std::string train_data, train_out, train_log, train_init;
    TrainingConfig tc;
    TrainOptions topts;
    EstimatorOptions train_est;
    train_cmd->add_option("--data", train_data,
                          "Dataset directory (one subdirectory per clip)")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint output path")->required();
    train_cmd->add_option("--init", train_init, "Resume from an existing checkpoint");
    train_cmd->add_option("--steps", topts.steps)->capture_default_str();
    train_cmd->add_option("--jobs", topts.jobs)->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();
    train_cmd->add_option("--patch", tc.patch_size)->capture_default_str();
    train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
    train_cmd->add_option("--seed", tc.seed)->capture_default_str();
    train_cmd->add_option("--log", train_log, "Per-step loss CSV");
    add_estimator_options(train_cmd, train_est);

    // ---- respond ----
    auto* resp = app.add_subcommand("respond",
                                    "Frequency response of the trajectory filter");
    std::string resp_out;
    int resp_skip = 2, resp_iters = 5, resp_samples = 65;
    resp->add_option("--out", resp_out, "Response CSV path")->required();
    resp->add_option("--skip", resp_skip)->capture_default_str();
    resp->add_option("--iterations", resp_iters)->capture_default_str();
    resp->add_option("--samples", resp_samples)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_spec, js, synth_out, synth_gt);

        if (stab->parsed()) {
            VideoSequence video = load_input(stab_in);
            auto est = make_estimator(stab_est, &video);
            std::unique_ptr<FusionEngine> engine;
            if (bypass_fusion) {
                engine = std::make_unique<BypassFusion>();
            } else {
                if (stab_checkpoint.empty())
                    throw IoError("stabilize needs --checkpoint or --bypass-fusion");
                if (!fs::is_regular_file(stab_checkpoint))
                    throw IoError("checkpoint not found: " + stab_checkpoint);
                NetPair<float> nets;
                load_checkpoint(nets, stab_checkpoint);
                engine = std::make_unique<NetFusion>(std::move(nets));
            }
            stab_cfg.verbose = true;
            const VideoSequence out = stabilize(video, *est, *engine, stab_cfg);
            try {
                save_sequence(out, stab_out);
            } catch (const std::runtime_error& e) {
                throw IoError(e.what());
            }
            if (!stab_report.empty()) {
                PyramidalLKFlow classical;
                const MetricReport report = evaluate_metrics(video, out, classical);
                write_text_atomic(stab_report, report.to_json());
            }
            return 0;
        }

        if (eval->parsed()) {
            VideoSequence input = load_input(eval_in);
            const VideoSequence output = load_input(eval_stab);
            auto est = make_estimator(eval_est, &input);
            const MetricReport report = evaluate_metrics(input, output, *est);
            std::cout << report.to_json() << "\n";
            if (!eval_report.empty()) write_text_atomic(eval_report, report.to_json());
            return 0;
        }

        if (train_cmd->parsed()) {
            if (!fs::is_directory(train_data))
                throw IoError("no such directory: " + train_data);
            std::vector<VideoSequence> clips;
            std::vector<fs::path> clip_dirs;
            for (const auto& e : fs::directory_iterator(train_data))
                if (e.is_directory()) clip_dirs.push_back(e.path());
            std::sort(clip_dirs.begin(), clip_dirs.end());
            for (const auto& d : clip_dirs) clips.push_back(load_input(d.string()));
            if (clips.empty()) throw IoError("no clip subdirectories in " + train_data);

            NetPair<float> nets(tc.include_masks);
            if (!train_init.empty()) {
                if (!fs::is_regular_file(train_init))
                    throw IoError("checkpoint not found: " + train_init);
                load_checkpoint(nets, train_init);
            } else {
                nets.init(tc.seed);
            }
            FixedRandomExtractor<float> extractor;
            auto est = make_estimator(train_est, nullptr);
            topts.log_csv = train_log;
            topts.progress = [&](int step, const LossReport& r) {
                if (step % 10 == 0 || step + 1 == topts.steps)
                    std::cerr << "step " << step << " loss " << r.total << "\n";
            };
            train(nets, extractor, clips, *est, tc, topts);
            save_checkpoint(nets, train_out);
            std::cerr << "saved checkpoint to " << train_out << "\n";
            return 0;
        }

        if (resp->parsed()) {
            save_response_csv(filter_response_curve(resp_skip, resp_iters, resp_samples),
                              resp_out);
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return 0;
}
