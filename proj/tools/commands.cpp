#include "commands.hpp"

#include "hairseg/augment.hpp"
#include "hairseg/bench.hpp"
#include "hairseg/formats.hpp"
#include "hairseg/metrics.hpp"
#include "hairseg/recolor.hpp"
#include "hairseg/rng.hpp"
#include "hairseg/segnet.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <ostream>
#include <set>

namespace hairseg::cli {
namespace {

// Removes every file it recorded unless commit() is called.
class OutputGuard {
  public:
    OutputGuard() = default;
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    void write(const fs::path& path, std::span<const std::uint8_t> bytes) {
        written_.push_back(path);
        write_file(path, bytes);
    }
    void write_text(const fs::path& path, std::string_view text) {
        written_.push_back(path);
        write_text_file(path, text);
    }
    std::size_t count() const { return written_.size(); }
    void commit() { committed_ = true; }

  private:
    std::vector<fs::path> written_;
    bool committed_ = false;
};

std::string numbered(const char* pattern, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, index);
    return buf;
}

Tensor load_image(const fs::path& path, std::size_t channels) { return read_image(read_file(path), channels); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

NetworkConfig load_config(const std::optional<fs::path>& path) {
    if (!path) return default_config();
    return config_from_json(read_text_file(*path));
}

} // namespace

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    return files;
}

int cmd_infer(const InferArgs& args, std::ostream&, std::ostream& err) {
    const auto frames = list_files(args.frames, ".ppm");
    if (frames.empty()) {
        err << "warning: no .ppm frames in " << args.frames.string() << "\n";
        return kOk;
    }

    WeightStore weights;
    try {
        weights = decode_weights(read_file(args.weights));
    } catch (const Error& e) {
        err << "error: cannot read weights " << args.weights.string() << ": " << e.what() << "\n";
        return kBadWeights;
    }
    NetworkConfig config = config_from_json(read_text_file(args.config));

    Tensor first = load_image(frames.front(), 3);
    config.input_size = {first.height(), first.width(), NetworkConfig::kInputChannels};
    try {
        (void)infer_shapes(config);
    } catch (const ConfigError& e) {
        err << "error: frame size " << first.width() << "x" << first.height() << " unusable: " << e.what() << "\n";
        return kInputMismatch;
    }
    std::shared_ptr<const Network> network;
    try {
        network = std::make_shared<const Network>(build_network(config, weights));
    } catch (const ConfigError& e) {
        err << "error: weights do not fit the network config: " << e.what() << "\n";
        return kBadWeights;
    }

    ensure_dir(args.out);
    OutputGuard guard;
    SegSession session(network);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        Tensor frame = k == 0 ? std::move(first) : load_image(frames[k], 3);
        if (frame.height() != config.input_size.height || frame.width() != config.input_size.width) {
            err << "error: " << frames[k].filename().string() << " is " << frame.width() << "x" << frame.height()
                << ", expected " << config.input_size.width << "x" << config.input_size.height << "\n";
            return kInputMismatch;
        }
        if (args.reset_every > 0 && k > 0 && k % args.reset_every == 0) session.reset();
        const Tensor mask = session.step(frame);
        guard.write(args.out / numbered("mask_%06zu.pgm", k), write_image(mask));
    }
    guard.commit();
    err << "wrote " << frames.size() << " masks to " << args.out.string() << "\n";
    return kOk;
}

int cmd_recolor(const RecolorArgs& args, std::ostream&, std::ostream& err) {
    if (!(args.i_dark < args.i_light)) {
        err << "error: --i-dark (" << args.i_dark << ") must be below --i-light (" << args.i_light << ")\n";
        return kBadParameters;
    }
    if (args.i_dark < 0.0 || args.i_light > 1.0) {
        err << "error: reference intensities must lie in [0, 1]\n";
        return kBadParameters;
    }
    RecolorProfile profile{parse_cube(read_text_file(args.profile_dark)), parse_cube(read_text_file(args.profile_light)),
                           args.i_dark, args.i_light, args.profile_dark.stem().string()};
    profile.validate();

    const auto frames = list_files(args.frames, ".ppm");
    std::vector<fs::path> masks;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        fs::path by_stem = args.masks / (frames[k].stem().string() + ".pgm");
        fs::path by_index = args.masks / numbered("mask_%06zu.pgm", k);
        if (fs::is_regular_file(by_stem)) {
            masks.push_back(by_stem);
        } else if (fs::is_regular_file(by_index)) {
            masks.push_back(by_index);
        } else {
            err << "error: no mask for frame " << frames[k].filename().string() << " (looked for "
                << by_stem.filename().string() << " and " << by_index.filename().string() << ")\n";
            return kInputMismatch;
        }
    }

    ensure_dir(args.out);
    OutputGuard guard;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const Tensor image = load_image(frames[k], 3);
        const Tensor mask = load_image(masks[k], 1);
        if (mask.height() != image.height() || mask.width() != image.width()) {
            err << "error: mask " << masks[k].filename().string() << " does not match frame size\n";
            return kInputMismatch;
        }
        guard.write(args.out / (frames[k].stem().string() + ".ppm"), write_image(recolor_frame(image, mask, profile)));
    }
    guard.commit();
    err << "recolored " << frames.size() << " frames into " << args.out.string() << "\n";
    return kOk;
}

int cmd_augment(const AugmentArgs& args, std::ostream&, std::ostream& err) {
    PriorPolicy policy;
    try {
        policy = PriorPolicy::parse(args.policy);
    } catch (const ValueError& e) {
        err << "error: --policy: " << e.what() << "\n";
        return kBadParameters;
    }
    if (!(args.tps_sigma >= 0.0)) {
        err << "error: --tps-sigma must be >= 0\n";
        return kBadParameters;
    }
    const PerturbationRanges ranges;

    std::vector<fs::path> images, masks;
    if (args.count > 0) {
        images = list_files(args.images, ".ppm");
        if (images.empty()) {
            err << "error: no .ppm images in " << args.images.string() << "\n";
            return kInputMismatch;
        }
        for (const auto& img : images) {
            fs::path m = args.masks / (img.stem().string() + ".pgm");
            if (!fs::is_regular_file(m)) {
                err << "error: no mask " << m.filename().string() << " for image " << img.filename().string() << "\n";
                return kInputMismatch;
            }
            masks.push_back(m);
        }
    }

    ensure_dir(args.out);
    OutputGuard guard;
    std::string manifest;
    for (std::size_t k = 0; k < args.count; ++k) {
        const std::size_t src = k % images.size();
        Tensor image = load_image(images[src], 3);
        Tensor mask = load_image(masks[src], 1);
        if (mask.height() != image.height() || mask.width() != image.width()) {
            err << "error: mask " << masks[src].filename().string() << " does not match its image size\n";
            return kInputMismatch;
        }
        const std::uint64_t example_seed = args.seed + k;
        if (args.tps_sigma > 0.0) {
            const TpsWarp warp = jittered_grid_warp(image.height(), image.width(), args.tps_grid, args.tps_sigma,
                                                    derive_seed(example_seed, 1));
            image = warp_image(image, warp);
            mask = warp_image(mask, warp);
        }
        const PriorSample prior = sample_prior_mask(mask, policy, ranges, example_seed);
        guard.write(args.out / numbered("example_%06zu_frame.ppm", k), write_image(image));
        guard.write(args.out / numbered("example_%06zu_prior.pgm", k), write_image(prior.mask));
        guard.write(args.out / numbered("example_%06zu_target.pgm", k), write_image(mask));
        manifest += std::to_string(k) + "," + std::string(branch_name(prior.branch)) + "," + std::to_string(example_seed) + "\n";
    }
    guard.write_text(args.out / "manifest.txt", manifest);
    guard.commit();
    err << "wrote " << args.count << " examples to " << args.out.string() << "\n";
    return kOk;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
    if (args.iters < 1) {
        err << "error: --iters must be >= 1\n";
        return kBadParameters;
    }
    NetworkConfig config = load_config(args.config);
    config.input_size = {args.size, args.size, NetworkConfig::kInputChannels};
    WeightStore weights;
    if (args.weights) {
        try {
            weights = decode_weights(read_file(*args.weights));
        } catch (const Error& e) {
            err << "error: cannot read weights " << args.weights->string() << ": " << e.what() << "\n";
            return kBadWeights;
        }
    } else {
        weights = random_weights(config, 1);
    }
    const Network network = build_network(config, weights);
    const BenchReport report = run_bench(network, args.warmup, args.iters, ExecOptions{args.threads});
    out << report.to_json() << "\n";
    return kOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    const auto pred = list_files(args.pred, ".pgm");
    const auto gt = list_files(args.gt, ".pgm");
    std::set<std::string> pred_names, gt_names;
    for (const auto& p : pred) pred_names.insert(p.filename().string());
    for (const auto& p : gt) gt_names.insert(p.filename().string());
    if (pred_names != gt_names) {
        err << "error: prediction and ground-truth directories hold different mask sets (" << pred_names.size()
            << " vs " << gt_names.size() << " files)\n";
        return kInputMismatch;
    }
    if (pred.empty()) {
        err << "error: no .pgm masks to evaluate\n";
        return kInputMismatch;
    }
    double sum = 0.0;
    char line[256];
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const Tensor a = load_image(pred[k], 1);
        const Tensor b = load_image(gt[k], 1);
        if (a.shape() != b.shape()) {
            err << "error: " << pred[k].filename().string() << " differs in size from its ground truth\n";
            return kInputMismatch;
        }
        const double v = iou(a, b, args.threshold).iou;
        sum += v;
        std::snprintf(line, sizeof line, "%s %.6f\n", pred[k].filename().string().c_str(), v);
        out << line;
    }
    std::snprintf(line, sizeof line, "mean_iou %.6f\n", sum / static_cast<double>(pred.size()));
    out << line;
    return kOk;
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming hair segmentation and recoloring"};
    app.require_subcommand(1);

    InferArgs infer;
    auto* infer_cmd = app.add_subcommand("infer", "Segment a directory of frames with temporal mask feedback");
    infer_cmd->add_option("--weights", infer.weights, "Binary weight file")->required();
    infer_cmd->add_option("--config", infer.config, "Network config JSON")->required();
    infer_cmd->add_option("--frames", infer.frames, "Directory of .ppm frames")->required();
    infer_cmd->add_option("--out", infer.out, "Output directory for mask_%06d.pgm")->required();
    infer_cmd->add_option("--reset-every", infer.reset_every, "Reset the temporal prior every N frames");

    RecolorArgs recolor;
    auto* recolor_cmd = app.add_subcommand("recolor", "Recolor hair with interpolated dark/light LUTs");
    recolor_cmd->add_option("--frames", recolor.frames)->required();
    recolor_cmd->add_option("--masks", recolor.masks)->required();
    recolor_cmd->add_option("--profile-dark", recolor.profile_dark, ".cube LUT for dark hair")->required();
    recolor_cmd->add_option("--profile-light", recolor.profile_light, ".cube LUT for light hair")->required();
    recolor_cmd->add_option("--i-dark", recolor.i_dark, "Reference intensity of the dark LUT")->required();
    recolor_cmd->add_option("--i-light", recolor.i_light, "Reference intensity of the light LUT")->required();
    recolor_cmd->add_option("--out", recolor.out)->required();

    AugmentArgs augment;
    auto* augment_cmd = app.add_subcommand("augment", "Emit training examples with synthesized prior masks");
    augment_cmd->add_option("--images", augment.images)->required();
    augment_cmd->add_option("--masks", augment.masks)->required();
    augment_cmd->add_option("--out", augment.out)->required();
    augment_cmd->add_option("--policy", augment.policy, "p_empty,p_identity,p_minor,p_major")->capture_default_str();
    augment_cmd->add_option("--tps-sigma", augment.tps_sigma, "TPS control-point jitter (pixels)")->capture_default_str();
    augment_cmd->add_option("--seed", augment.seed)->capture_default_str();
    augment_cmd->add_option("--count", augment.count)->capture_default_str();

    BenchArgs bench;
    std::string bench_weights, bench_config;
    auto* bench_cmd = app.add_subcommand("bench", "Time forward passes and print a JSON report");
    bench_cmd->add_option("--weights", bench_weights, "Weight file (seeded random weights if omitted)");
    bench_cmd->add_option("--config", bench_config, "Network config JSON (default config if omitted)");
    bench_cmd->add_option("--size", bench.size, "Square input side")->capture_default_str();
    bench_cmd->add_option("--warmup", bench.warmup)->capture_default_str();
    bench_cmd->add_option("--iters", bench.iters)->capture_default_str();
    bench_cmd->add_option("--threads", bench.threads)->capture_default_str();

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Per-frame and mean IOU between two mask directories");
    eval_cmd->add_option("--pred", eval.pred)->required();
    eval_cmd->add_option("--gt", eval.gt)->required();
    eval_cmd->add_option("--threshold", eval.threshold)->capture_default_str();

    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kFailure;
    }

    try {
        if (*infer_cmd) return cmd_infer(infer, out, err);
        if (*recolor_cmd) return cmd_recolor(recolor, out, err);
        if (*augment_cmd) return cmd_augment(augment, out, err);
        if (*bench_cmd) {
            if (!bench_weights.empty()) bench.weights = bench_weights;
            if (!bench_config.empty()) bench.config = bench_config;
            return cmd_bench(bench, out, err);
        }
        if (*eval_cmd) return cmd_eval(eval, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

} // namespace hairseg::cli
