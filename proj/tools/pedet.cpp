// pedet: detection-ensemble and evaluation toolkit for classifier-guided
// pulmonary embolism detection. Subcommands cover CT windowing, box fusion,
// classifier-guided filtering, evaluation, patient-wise splits, attention
// crops, and report aggregation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pedet/datasets.hpp"
#include "pedet/errors.hpp"
#include "pedet/fusion.hpp"
#include "pedet/geometry.hpp"
#include "pedet/guidance.hpp"
#include "pedet/imaging.hpp"
#include "pedet/io.hpp"
#include "pedet/metrics.hpp"
#include "pedet/parallel.hpp"
#include "pedet/report.hpp"

namespace {

using namespace pedet;

// malformed flag values (not data files) exit with the usage code
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

double parse_flag_number(const std::string& tok, const std::string& flag) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw UsageError(flag + ": bad number '" + tok + "'");
    return v;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(sep, start);
        if (end == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

// --weights accepts repeated flags and comma lists of model=weight pairs
ModelWeights parse_weights(const std::vector<std::string>& specs,
                           const std::optional<double>& default_weight) {
    if (specs.empty() && !default_weight) return ModelWeights::uniform();
    ModelWeights w;
    w.default_weight = default_weight;
    for (const std::string& spec : specs) {
        for (const std::string& pair : split_on(spec, ',')) {
            if (pair.empty()) continue;
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("--weights: expected model=weight, got '" + pair + "'");
            const std::string model = pair.substr(0, eq);
            if (w.weights.count(model))
                throw UsageError("--weights: model '" + model + "' given twice");
            w.weights[model] = parse_flag_number(pair.substr(eq + 1), "--weights");
        }
    }
    if (w.weights.empty() && !w.default_weight)
        throw UsageError("--weights: no model=weight pairs found");
    return w;
}

// --ratios accepts name=fraction lists and the 80:20 / 70:10:20 shorthand
SplitSpec parse_ratios(const std::string& spec, std::uint32_t seed) {
    SplitSpec out;
    out.seed = seed;
    if (spec.find('=') != std::string::npos) {
        for (const std::string& pair : split_on(spec, ',')) {
            if (pair.empty()) continue;
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("--ratios: expected name=fraction, got '" + pair + "'");
            out.fractions.emplace_back(pair.substr(0, eq),
                                       parse_flag_number(pair.substr(eq + 1), "--ratios"));
        }
        return out;
    }

    std::vector<double> parts;
    for (const std::string& tok : split_on(spec, ':'))
        parts.push_back(parse_flag_number(tok, "--ratios"));
    double sum = 0.0;
    for (double p : parts) {
        if (!(p > 0.0)) throw UsageError("--ratios: shares must be positive");
        sum += p;
    }
    std::vector<std::string> names;
    if (parts.size() == 2) names = {"train", "test"};
    else if (parts.size() == 3) names = {"train", "val", "test"};
    else
        throw UsageError("--ratios: colon shorthand supports 2 or 3 shares; use name=fraction");
    for (std::size_t i = 0; i < parts.size(); ++i)
        out.fractions.emplace_back(names[i], parts[i] / sum);
    return out;
}

// output ordering for prediction files: images first, canonical order within
bool file_order(const Detection& a, const Detection& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return detection_before(a, b);
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

struct WindowArgs {
    std::string input, output;
    double level = 40.0;
    double width = 400.0;
};

void run_window(const WindowArgs& args) {
    const HUImage hu = read_hu_image(args.input);
    const WindowSpec spec{args.level, args.width};
    write_pgm(args.output, window(hu, spec));
}

struct FuseArgs {
    std::vector<std::string> inputs;
    std::string output;
    std::string method = "wbf";
    double iou = 0.3;
    double score_floor = 0.005;
    std::vector<std::string> weight_specs;
    std::optional<double> default_weight;
    unsigned threads = 1;
};

void run_fuse(const FuseArgs& args) {
    FusionConfig cfg;
    cfg.method = fusion_method_from_string(args.method);
    cfg.iou_threshold = args.iou;
    cfg.score_floor = args.score_floor;
    cfg.validate();
    const ModelWeights weights = parse_weights(args.weight_specs, args.default_weight);
    weights.validate();

    std::map<std::string, std::map<std::string, std::vector<Detection>>> by_image;
    for (const std::string& path : args.inputs)
        for (Detection& d : read_predictions(path))
            by_image[d.image_id][d.model_id].push_back(std::move(d));

    std::vector<const std::map<std::string, std::vector<Detection>>*> inputs;
    inputs.reserve(by_image.size());
    for (const auto& [image_id, per_model] : by_image) inputs.push_back(&per_model);

    std::vector<std::vector<Detection>> fused(inputs.size());
    parallel_for_index(inputs.size(), args.threads,
                       [&](std::size_t i) { fused[i] = ensemble(*inputs[i], cfg, weights); });

    std::vector<Detection> out;
    for (std::vector<Detection>& f : fused) out.insert(out.end(), f.begin(), f.end());
    std::sort(out.begin(), out.end(), file_order);
    write_predictions(args.output, out);
}

struct GuideArgs {
    std::string predictions, verdicts, output;
    double theta = 0.5;
    double conf_floor = 0.018;
};

void run_guide(const GuideArgs& args) {
    GuidanceConfig cfg{args.theta, args.conf_floor};
    cfg.validate();
    const std::vector<Detection> preds = read_predictions(args.predictions);

    std::map<std::string, double> p_by_image;
    for (const ClassifierVerdict& v : read_verdicts(args.verdicts)) {
        auto [it, fresh] = p_by_image.emplace(v.image_id, v.p);
        if (!fresh) throw DataError("duplicate classifier verdict for image '" + v.image_id + "'");
    }

    std::set<std::string> missing;
    for (const Detection& d : preds)
        if (!p_by_image.count(d.image_id)) missing.insert(d.image_id);
    if (!missing.empty()) {
        std::string msg = "missing classifier verdict for image(s):";
        for (const std::string& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    // same gate as guided_filter, applied record by record so the input
    // file's ordering survives verbatim
    std::vector<Detection> kept;
    kept.reserve(preds.size());
    for (const Detection& d : preds)
        if (p_by_image.at(d.image_id) >= cfg.theta || d.score > cfg.conf_floor) kept.push_back(d);

    write_predictions(args.output, kept);
    std::cout << "guide: kept " << kept.size() << " of " << preds.size() << " detections ("
              << preds.size() - kept.size() << " dropped)\n";
}

struct EvalArgs {
    std::string predictions, ground_truth, output;
    std::vector<double> ious;
    double score_threshold = 0.005;
    std::string verdicts;
    double theta = 0.5;
    std::string label;
    unsigned threads = 1;
};

void run_eval(const EvalArgs& args) {
    EvalConfig cfg;
    if (!args.ious.empty()) cfg.iou_thresholds = args.ious;
    cfg.score_threshold = args.score_threshold;
    cfg.theta = args.theta;
    cfg.threads = args.threads;

    const std::vector<Detection> preds = read_predictions(args.predictions);
    const std::vector<GroundTruthBox> gts = read_ground_truth(args.ground_truth);
    std::optional<std::vector<ClassifierVerdict>> verdicts;
    if (!args.verdicts.empty()) verdicts = read_verdicts(args.verdicts);

    std::string label = args.label;
    if (label.empty()) label = std::filesystem::path(args.output).stem().string();

    write_report(args.output, build_eval_report(preds, gts, cfg, label, verdicts));
}

struct SplitArgs {
    std::string manifest, output;
    std::string ratios = "train=0.8,test=0.2";
    std::uint32_t seed = 0;
};

void run_split(const SplitArgs& args) {
    const SplitSpec spec = parse_ratios(args.ratios, args.seed);
    DatasetManifest manifest = read_manifest(args.manifest);
    const auto assignment = patient_split(manifest, spec);

    std::map<std::string, std::string> split_of;
    for (const auto& [split, ids] : assignment)
        for (const std::string& id : ids) split_of[id] = split;
    for (PatientRecord& p : manifest.patients) p.split = split_of.at(p.patient_id);

    write_manifest(args.output, manifest);
}

struct CropArgs {
    std::string heatmap, output;
    int image_width = 0;
    int image_height = 0;
};

void run_crop(const CropArgs& args) {
    const Heatmap heat = read_heatmap(args.heatmap);
    CropRecord rec;
    rec.image_width = args.image_width;
    rec.image_height = args.image_height;
    rec.box = attention_crop(heat, args.image_width, args.image_height);
    write_crop(args.output, rec);
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string output;
};

void run_report(const ReportArgs& args) {
    std::vector<EvalReport> reports;
    reports.reserve(args.inputs.size());
    for (const std::string& path : args.inputs) reports.push_back(read_report(path));
    const std::string table = comparison_table(reports);
    if (args.output.empty()) {
        std::cout << table;
    } else {
        std::ofstream out(args.output);
        if (!out) throw DataError("cannot open '" + args.output + "' for writing");
        out << table;
        if (!out) throw DataError("write failed for '" + args.output + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"detection-ensemble and evaluation toolkit for classifier-guided PE detection"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read option defaults from a TOML config file")
        ->envname("PEDET_CONFIG");

    WindowArgs window_args;
    CLI::App* window_cmd = app.add_subcommand("window", "apply a CT window to an HU image, write PGM");
    window_cmd->add_option("input", window_args.input, "HU image descriptor")->required();
    window_cmd->add_option("-o,--output", window_args.output, "output PGM path")->required();
    window_cmd->add_option("--level", window_args.level, "window level in HU")
        ->capture_default_str();
    window_cmd->add_option("--width", window_args.width, "window width in HU")
        ->capture_default_str();

    FuseArgs fuse_args;
    CLI::App* fuse_cmd = app.add_subcommand("fuse", "ensemble prediction files with NMS, NMW or WBF");
    fuse_cmd->add_option("inputs", fuse_args.inputs, "prediction files")->required();
    fuse_cmd->add_option("-o,--output", fuse_args.output, "output prediction file")->required();
    fuse_cmd->add_option("--method", fuse_args.method, "fusion method: nms, nmw or wbf")
        ->capture_default_str();
    fuse_cmd->add_option("--iou", fuse_args.iou, "IoU threshold for clustering")
        ->capture_default_str();
    fuse_cmd->add_option("--score-floor", fuse_args.score_floor,
                         "drop weighted detections scoring below this before fusion")
        ->capture_default_str();
    fuse_cmd->add_option("--weights", fuse_args.weight_specs,
                         "per-model score weights as model=weight[,model=weight...]");
    fuse_cmd->add_option("--default-weight", fuse_args.default_weight,
                         "weight for models absent from --weights");
    fuse_cmd->add_option("--threads", fuse_args.threads, "worker threads")->capture_default_str();

    GuideArgs guide_args;
    CLI::App* guide_cmd =
        app.add_subcommand("guide", "filter predictions with slice classifier verdicts");
    guide_cmd->add_option("predictions", guide_args.predictions, "prediction file")->required();
    guide_cmd->add_option("verdicts", guide_args.verdicts, "classifier verdict file")->required();
    guide_cmd->add_option("-o,--output", guide_args.output, "output prediction file")->required();
    guide_cmd->add_option("--theta", guide_args.theta, "trust the image when p >= theta")
        ->capture_default_str();
    guide_cmd->add_option("--conf-floor", guide_args.conf_floor,
                          "survival score on distrusted images (strictly above)")
        ->capture_default_str();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval_cmd->add_option("predictions", eval_args.predictions, "prediction file")->required();
    eval_cmd->add_option("groundtruth", eval_args.ground_truth, "ground truth file")->required();
    eval_cmd->add_option("-o,--output", eval_args.output, "output report file")->required();
    eval_cmd->add_option("--iou", eval_args.ious, "IoU threshold, repeatable (default 0.2 0.5)");
    eval_cmd->add_option("--score-threshold", eval_args.score_threshold,
                         "operating-point score threshold")
        ->capture_default_str();
    eval_cmd->add_option("--verdicts", eval_args.verdicts,
                         "classifier verdict file; adds the classification block");
    eval_cmd->add_option("--theta", eval_args.theta, "slice call threshold for the verdicts")
        ->capture_default_str();
    eval_cmd->add_option("--label", eval_args.label, "report label (default: output stem)");
    eval_cmd->add_option("--threads", eval_args.threads, "worker threads")->capture_default_str();

    SplitArgs split_args;
    CLI::App* split_cmd = app.add_subcommand("split", "assign patients to splits, write tagged manifest");
    split_cmd->add_option("manifest", split_args.manifest, "dataset manifest")->required();
    split_cmd->add_option("-o,--output", split_args.output, "output manifest path")->required();
    split_cmd->add_option("--ratios", split_args.ratios,
                          "name=fraction[,...] or the 80:20 / 70:10:20 shorthand")
        ->capture_default_str();
    split_cmd->add_option("--seed", split_args.seed, "shuffle seed")->capture_default_str();

    CropArgs crop_args;
    CLI::App* crop_cmd = app.add_subcommand("crop", "attention crop box from a heatmap");
    crop_cmd->add_option("heatmap", crop_args.heatmap, "heatmap file")->required();
    crop_cmd->add_option("-o,--output", crop_args.output, "output crop record")->required();
    crop_cmd->add_option("--image-width", crop_args.image_width, "target image width")->required();
    crop_cmd->add_option("--image-height", crop_args.image_height, "target image height")
        ->required();

    ReportArgs report_args;
    CLI::App* report_cmd =
        app.add_subcommand("report", "aggregate evaluation reports into a comparison table");
    report_cmd->add_option("inputs", report_args.inputs, "report files")->required();
    report_cmd->add_option("-o,--output", report_args.output,
                           "output path (omit to print to stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (window_cmd->parsed()) run_window(window_args);
        else if (fuse_cmd->parsed()) run_fuse(fuse_args);
        else if (guide_cmd->parsed()) run_guide(guide_args);
        else if (eval_cmd->parsed()) run_eval(eval_args);
        else if (split_cmd->parsed()) run_split(split_args);
        else if (crop_cmd->parsed()) run_crop(crop_args);
        else if (report_cmd->parsed()) run_report(report_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
