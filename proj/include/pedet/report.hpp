#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"
#include "pedet/guidance.hpp"
#include "pedet/io.hpp"
#include "pedet/metrics.hpp"
#include "pedet/parallel.hpp"

namespace pedet {

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct PrCurvePoint {
    int class_id = 0;
    double recall = 0.0;
    double precision = 0.0;
};

/// Detection results at one IoU threshold: operating-point counts and
/// ratios at the configured score threshold, AP per class, and the raw PR
/// sweep for plotting.
struct DetectionEval {
    double iou_threshold = 0.5;
    std::uint64_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    std::map<int, double> ap_per_class;
    double map = 0.0;
    std::vector<PrCurvePoint> pr_points;
};

struct ClassificationEval {
    double theta = 0.5;
    ConfusionCounts counts;
    double accuracy = 0.0, precision = 0.0, sensitivity = 0.0, specificity = 0.0, f1 = 0.0;
    std::optional<double> auroc; // absent when the ROC is degenerate
    std::vector<RocPoint> roc_points;
};

struct EvalReport {
    std::string label;
    double score_threshold = 0.005;
    std::vector<DetectionEval> detection; // ascending by iou_threshold
    std::optional<ClassificationEval> classification;
    std::vector<std::string> flags; // degenerate-denominator markers
};

struct EvalConfig {
    std::vector<double> iou_thresholds{0.2, 0.5};
    double score_threshold = 0.005;
    double theta = 0.5; // slice call threshold, used only with verdicts
    unsigned threads = 1;

    void validate() const {
        if (iou_thresholds.empty()) throw ConfigError("eval needs at least one IoU threshold");
        for (double t : iou_thresholds)
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("eval IoU thresholds must lie in (0,1)");
        if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
            throw ConfigError("eval score threshold must lie in [0,1]");
        if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("eval theta must lie in [0,1]");
    }
};

/// Full evaluation pass. Detections and ground truth are grouped per
/// (image, class) and matched once per IoU threshold; matching tasks run on
/// the configured worker count with results landing in indexed slots, so
/// thread count never shows in the output. The classification block is
/// produced only when verdicts are given: an image counts as positive when
/// it has any ground-truth box, and as called-positive when p >= theta.
inline EvalReport build_eval_report(const std::vector<Detection>& preds,
                                    const std::vector<GroundTruthBox>& gts,
                                    const EvalConfig& cfg, const std::string& label,
                                    const std::optional<std::vector<ClassifierVerdict>>& verdicts =
                                        std::nullopt) {
    cfg.validate();
    if (gts.empty()) throw DataError("evaluation requires ground truth; none was given");

    std::vector<double> thresholds = cfg.iou_thresholds;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    EvalReport report;
    report.label = label;
    report.score_threshold = cfg.score_threshold;

    // group by (image, class)
    std::map<std::pair<std::string, int>, std::pair<std::vector<Detection>, std::vector<GroundTruthBox>>>
        groups;
    for (const Detection& d : preds) groups[{d.image_id, d.class_id}].first.push_back(d);
    for (const GroundTruthBox& g : gts) groups[{g.image_id, g.class_id}].second.push_back(g);

    std::vector<const std::pair<const std::pair<std::string, int>,
                                std::pair<std::vector<Detection>, std::vector<GroundTruthBox>>>*>
        group_ptrs;
    group_ptrs.reserve(groups.size());
    for (const auto& g : groups) group_ptrs.push_back(&g);

    const std::size_t n_groups = group_ptrs.size();
    std::vector<std::vector<MatchResult>> slots(thresholds.size(),
                                                std::vector<MatchResult>(n_groups));
    parallel_for_index(thresholds.size() * n_groups, cfg.threads, [&](std::size_t task) {
        const std::size_t ti = task / n_groups;
        const std::size_t gi = task % n_groups;
        const auto& [key, data] = *group_ptrs[gi];
        slots[ti][gi] = match_detections(data.first, data.second, thresholds[ti]);
    });

    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        DetectionEval det;
        det.iou_threshold = thresholds[ti];

        std::map<int, std::vector<MatchResult>> per_class;
        for (std::size_t gi = 0; gi < n_groups; ++gi)
            per_class[group_ptrs[gi]->first.second].push_back(slots[ti][gi]);

        for (const auto& [cls, results] : per_class) {
            std::uint64_t class_gt = 0;
            for (const MatchResult& r : results) class_gt += r.gt_count;
            if (class_gt == 0) continue; // prediction-only class: no AP, counted below
            det.ap_per_class[cls] = average_precision(results);
            for (const PrPoint& p : pr_curve(results))
                det.pr_points.push_back({cls, p.recall, p.precision});
        }
        det.map = mean_ap(det.ap_per_class);

        const DetectionPRF prf = detection_prf(slots[ti], cfg.score_threshold);
        det.tp = prf.tp;
        det.fp = prf.fp;
        det.fn = prf.fn;
        det.precision = prf.precision;
        det.recall = prf.recall;
        det.f1 = prf.f1;
        if (det.tp + det.fp == 0)
            report.flags.push_back("detection_precision_undefined@" +
                                   format_fixed(det.iou_threshold));

        report.detection.push_back(std::move(det));
    }

    if (verdicts) {
        std::map<std::string, double> p_by_image;
        for (const ClassifierVerdict& v : *verdicts) {
            auto [it, fresh] = p_by_image.emplace(v.image_id, v.p);
            if (!fresh) throw DataError("duplicate classifier verdict for image '" + v.image_id + "'");
        }

        std::set<std::string> positives;
        for (const GroundTruthBox& g : gts) positives.insert(g.image_id);

        std::set<std::string> universe;
        for (const auto& [id, p] : p_by_image) universe.insert(id);
        for (const GroundTruthBox& g : gts) universe.insert(g.image_id);
        for (const Detection& d : preds) universe.insert(d.image_id);

        std::string missing;
        for (const std::string& id : universe)
            if (!p_by_image.count(id)) missing += " " + id;
        if (!missing.empty())
            throw DataError("missing classifier verdict for image(s):" + missing);

        ClassificationEval cls;
        cls.theta = cfg.theta;
        std::vector<ScoredLabel> samples;
        samples.reserve(universe.size());
        for (const std::string& id : universe) {
            const bool truth = positives.count(id) > 0;
            const bool called = p_by_image.at(id) >= cfg.theta;
            if (truth && called) cls.counts.tp++;
            else if (!truth && called) cls.counts.fp++;
            else if (truth && !called) cls.counts.fn++;
            else cls.counts.tn++;
            samples.push_back({p_by_image.at(id), truth});
        }

        cls.accuracy = accuracy(cls.counts);
        cls.precision = precision(cls.counts);
        cls.sensitivity = sensitivity(cls.counts);
        cls.specificity = specificity(cls.counts);
        cls.f1 = f1_score(cls.counts);
        if (cls.counts.tp + cls.counts.fp == 0)
            report.flags.push_back("classification_precision_undefined");
        if (cls.counts.tp + cls.counts.fn == 0)
            report.flags.push_back("classification_sensitivity_undefined");
        if (cls.counts.tn + cls.counts.fp == 0)
            report.flags.push_back("classification_specificity_undefined");

        try {
            cls.auroc = auroc(samples);
            cls.roc_points = roc_points(samples);
        } catch (const DataError&) {
            report.flags.push_back("auroc_degenerate");
        }

        report.classification = std::move(cls);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline void write_report(const std::string& path, const EvalReport& report) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-report 1\n";
    out << "label " << report.label << '\n';
    out << "score_threshold " << format_fixed(report.score_threshold) << '\n';
    for (const DetectionEval& det : report.detection) {
        out << "detection " << format_fixed(det.iou_threshold) << ' ' << det.tp << ' ' << det.fp
            << ' ' << det.fn << ' ' << format_fixed(det.precision) << ' '
            << format_fixed(det.recall) << ' ' << format_fixed(det.f1) << ' '
            << format_fixed(det.map) << '\n';
        for (const auto& [cls, ap] : det.ap_per_class)
            out << "ap " << format_fixed(det.iou_threshold) << ' ' << cls << ' '
                << format_fixed(ap) << '\n';
        for (const PrCurvePoint& p : det.pr_points)
            out << "pr_point " << format_fixed(det.iou_threshold) << ' ' << p.class_id << ' '
                << format_fixed(p.recall) << ' ' << format_fixed(p.precision) << '\n';
    }
    if (report.classification) {
        const ClassificationEval& cls = *report.classification;
        out << "theta " << format_fixed(cls.theta) << '\n';
        out << "classification " << cls.counts.tp << ' ' << cls.counts.fp << ' ' << cls.counts.tn
            << ' ' << cls.counts.fn << ' ' << format_fixed(cls.accuracy) << ' '
            << format_fixed(cls.precision) << ' ' << format_fixed(cls.sensitivity) << ' '
            << format_fixed(cls.specificity) << ' ' << format_fixed(cls.f1) << '\n';
        if (cls.auroc) out << "auroc " << format_fixed(*cls.auroc) << '\n';
        for (const RocPoint& p : cls.roc_points)
            out << "roc_point " << format_fixed(p.fpr) << ' ' << format_fixed(p.tpr) << '\n';
    }
    for (const std::string& flag : report.flags) out << "flag " << flag << '\n';
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline EvalReport read_report(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "report");
    EvalReport report;
    std::optional<double> theta;
    bool saw_classification = false;
    ClassificationEval cls;

    auto detection_for = [&](double iou, const TextLine& line) -> DetectionEval& {
        for (DetectionEval& det : report.detection)
            if (det.iou_threshold == iou) return det;
        throw ParseError(detail::at_line(doc, line) +
                         ": references an IoU threshold with no detection line");
    };

    for (const TextLine& line : doc.lines) {
        const std::string& kw = line.tokens[0];
        if (kw == "label") {
            std::string joined;
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                if (i > 1) joined += ' ';
                joined += line.tokens[i];
            }
            report.label = joined;
        } else if (kw == "score_threshold") {
            detail::require_tokens(doc, line, 2, 2, "score_threshold <v>");
            report.score_threshold = detail::parse_num(doc, line, 1, "score_threshold");
        } else if (kw == "detection") {
            detail::require_tokens(doc, line, 9, 9,
                                   "detection <iou> <tp> <fp> <fn> <p> <r> <f1> <map>");
            DetectionEval det;
            det.iou_threshold = detail::parse_num(doc, line, 1, "iou");
            det.tp = static_cast<std::uint64_t>(detail::parse_int(doc, line, 2, "tp"));
            det.fp = static_cast<std::uint64_t>(detail::parse_int(doc, line, 3, "fp"));
            det.fn = static_cast<std::uint64_t>(detail::parse_int(doc, line, 4, "fn"));
            det.precision = detail::parse_num(doc, line, 5, "precision");
            det.recall = detail::parse_num(doc, line, 6, "recall");
            det.f1 = detail::parse_num(doc, line, 7, "f1");
            det.map = detail::parse_num(doc, line, 8, "map");
            report.detection.push_back(std::move(det));
        } else if (kw == "ap") {
            detail::require_tokens(doc, line, 4, 4, "ap <iou> <class_id> <ap>");
            DetectionEval& det = detection_for(detail::parse_num(doc, line, 1, "iou"), line);
            det.ap_per_class[static_cast<int>(detail::parse_int(doc, line, 2, "class_id"))] =
                detail::parse_num(doc, line, 3, "ap");
        } else if (kw == "pr_point") {
            detail::require_tokens(doc, line, 5, 5, "pr_point <iou> <class_id> <recall> <precision>");
            DetectionEval& det = detection_for(detail::parse_num(doc, line, 1, "iou"), line);
            det.pr_points.push_back({static_cast<int>(detail::parse_int(doc, line, 2, "class_id")),
                                     detail::parse_num(doc, line, 3, "recall"),
                                     detail::parse_num(doc, line, 4, "precision")});
        } else if (kw == "theta") {
            detail::require_tokens(doc, line, 2, 2, "theta <v>");
            theta = detail::parse_num(doc, line, 1, "theta");
        } else if (kw == "classification") {
            detail::require_tokens(doc, line, 10, 10,
                                   "classification <tp> <fp> <tn> <fn> <acc> <p> <sens> <spec> <f1>");
            cls.counts.tp = static_cast<std::uint64_t>(detail::parse_int(doc, line, 1, "tp"));
            cls.counts.fp = static_cast<std::uint64_t>(detail::parse_int(doc, line, 2, "fp"));
            cls.counts.tn = static_cast<std::uint64_t>(detail::parse_int(doc, line, 3, "tn"));
            cls.counts.fn = static_cast<std::uint64_t>(detail::parse_int(doc, line, 4, "fn"));
            cls.accuracy = detail::parse_num(doc, line, 5, "accuracy");
            cls.precision = detail::parse_num(doc, line, 6, "precision");
            cls.sensitivity = detail::parse_num(doc, line, 7, "sensitivity");
            cls.specificity = detail::parse_num(doc, line, 8, "specificity");
            cls.f1 = detail::parse_num(doc, line, 9, "f1");
            saw_classification = true;
        } else if (kw == "auroc") {
            detail::require_tokens(doc, line, 2, 2, "auroc <v>");
            cls.auroc = detail::parse_num(doc, line, 1, "auroc");
        } else if (kw == "roc_point") {
            detail::require_tokens(doc, line, 3, 3, "roc_point <fpr> <tpr>");
            cls.roc_points.push_back({detail::parse_num(doc, line, 1, "fpr"),
                                      detail::parse_num(doc, line, 2, "tpr")});
        } else if (kw == "flag") {
            detail::require_tokens(doc, line, 2, 2, "flag <name>");
            report.flags.push_back(line.tokens[1]);
        } else {
            throw ParseError(detail::at_line(doc, line) + ": unknown record '" + kw + "'");
        }
    }

    if (saw_classification) {
        if (theta) cls.theta = *theta;
        report.classification = std::move(cls);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Comparison table across reports
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim_number(double v) {
    std::string s = format_fixed(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

} // namespace detail

/// One aligned text table over many runs: a row per report, and per IoU
/// threshold the mAP plus the operating-point precision/recall/F1. Metrics
/// a report does not carry show as '-'.
inline std::string comparison_table(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw DataError("comparison table needs at least one report");

    std::vector<double> thresholds;
    for (const EvalReport& r : reports)
        for (const DetectionEval& det : r.detection) thresholds.push_back(det.iou_threshold);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<std::string> header{"label"};
    for (double t : thresholds) {
        const std::string suffix = "@" + detail::trim_number(t);
        header.push_back("mAP" + suffix);
        header.push_back("P" + suffix);
        header.push_back("R" + suffix);
        header.push_back("F1" + suffix);
    }

    std::vector<std::vector<std::string>> rows{header};
    for (const EvalReport& r : reports) {
        std::vector<std::string> row{r.label.empty() ? "-" : r.label};
        for (double t : thresholds) {
            const DetectionEval* found = nullptr;
            for (const DetectionEval& det : r.detection)
                if (det.iou_threshold == t) found = &det;
            if (found) {
                row.push_back(format_fixed(found->map));
                row.push_back(format_fixed(found->precision));
                row.push_back(format_fixed(found->recall));
                row.push_back(format_fixed(found->f1));
            } else {
                row.insert(row.end(), 4, "-");
            }
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::string out = "pedet-comparison 1\n";
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        std::string line = ri == 0 ? "#" : " ";
        for (std::size_t c = 0; c < rows[ri].size(); ++c) {
            line += ' ';
            line += rows[ri][c];
            line.append(widths[c] - rows[ri][c].size(), ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (ri == 0) {
            // rule under the header
            std::string rule = "#";
            for (std::size_t c = 0; c < widths.size(); ++c) {
                rule += ' ';
                rule.append(widths[c], '-');
            }
            out += rule + "\n";
        }
    }
    return out;
}

} // namespace pedet
