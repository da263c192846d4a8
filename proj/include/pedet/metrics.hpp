#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"

namespace pedet {

// ---------------------------------------------------------------------------
// Slice-level classification metrics
// ---------------------------------------------------------------------------

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

// Each ratio returns 0 when its denominator is empty. Callers that need to
// distinguish "metric is 0" from "metric is undefined" check the counts
// themselves and flag it.

inline double accuracy(const ConfusionCounts& c) {
    const std::uint64_t n = c.total();
    return n == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
}

inline double precision(const ConfusionCounts& c) {
    const std::uint64_t n = c.tp + c.fp;
    return n == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(n);
}

inline double sensitivity(const ConfusionCounts& c) {
    const std::uint64_t n = c.tp + c.fn;
    return n == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(n);
}

inline double specificity(const ConfusionCounts& c) {
    const std::uint64_t n = c.tn + c.fp;
    return n == 0 ? 0.0 : static_cast<double>(c.tn) / static_cast<double>(n);
}

inline double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

inline double f1_score(const ConfusionCounts& c) {
    return f1_score(precision(c), sensitivity(c));
}

// ---------------------------------------------------------------------------
// ROC / AUROC
// ---------------------------------------------------------------------------

struct ScoredLabel {
    double score = 0.0;
    bool positive = false;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// ROC curve swept over the distinct scores in descending order, a sample
/// counting as predicted-positive when score >= threshold. Starts at (0,0)
/// and ends at (1,1). Needs at least one sample of each class.
inline std::vector<RocPoint> roc_points(std::vector<ScoredLabel> samples) {
    std::uint64_t pos = 0, neg = 0;
    for (const ScoredLabel& s : samples) (s.positive ? pos : neg)++;
    if (pos == 0) throw DataError("roc: no positive samples, curve is degenerate");
    if (neg == 0) throw DataError("roc: no negative samples, curve is degenerate");

    std::sort(samples.begin(), samples.end(),
              [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0});
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < samples.size()) {
        const double s = samples[i].score;
        // consume the whole tie group before emitting a point
        while (i < samples.size() && samples[i].score == s) {
            (samples[i].positive ? tp : fp)++;
            ++i;
        }
        pts.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return pts;
}

/// Area under a piecewise-linear curve given as (x, y) points with
/// nondecreasing x.
inline double trapezoid_area(const std::vector<RocPoint>& pts) {
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) * 0.5;
    return area;
}

/// AUROC via the rank statistic: the probability a random positive outscores
/// a random negative, ties counting one half. Equals the trapezoidal area
/// under roc_points exactly.
inline double auroc(std::vector<ScoredLabel> samples) {
    std::uint64_t pos = 0, neg = 0;
    for (const ScoredLabel& s : samples) (s.positive ? pos : neg)++;
    if (pos == 0) throw DataError("auroc: no positive samples");
    if (neg == 0) throw DataError("auroc: no negative samples");

    std::sort(samples.begin(), samples.end(),
              [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });

    // average ranks across tie groups, 1-based
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j].score == samples[i].score) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (samples[k].positive) rank_sum_pos += avg_rank;
        i = j;
    }

    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    return (rank_sum_pos - p * (p + 1.0) * 0.5) / (p * n);
}

// ---------------------------------------------------------------------------
// Pointwise losses
// ---------------------------------------------------------------------------

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Binary cross entropy for one prediction, probability clamped away from
/// the log singularities.
inline double bce(double p, double y) {
    constexpr double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

inline double bce_mean(const std::vector<double>& probs, const std::vector<double>& targets) {
    if (probs.size() != targets.size())
        throw DataError("bce_mean: prediction and target counts differ");
    if (probs.empty()) throw DataError("bce_mean: no samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) sum += bce(probs[i], targets[i]);
    return sum / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Detection matching and average precision
// ---------------------------------------------------------------------------

struct GroundTruthBox {
    std::string image_id;
    int class_id = 0;
    BBox box;
};

struct ScoredMatch {
    double score = 0.0;
    bool is_tp = false;
};

/// Matching outcome for one (image, class) group: every detection becomes a
/// scored TP/FP entry, sorted descending by score.
struct MatchResult {
    std::vector<ScoredMatch> entries;
    std::uint64_t gt_count = 0;
    double iou_threshold = 0.5;
};

/// Greedy matching: detections in descending score order each claim the
/// still-unmatched same-class ground-truth box they overlap best, provided
/// the overlap strictly exceeds the threshold. Ties between ground-truth
/// boxes go to the earlier one in input order. Greedy in score order means
/// dropping low-score detections afterwards never changes how the survivors
/// matched, so one matching pass serves every operating point.
inline MatchResult match_detections(std::vector<Detection> dets,
                                    const std::vector<GroundTruthBox>& gts,
                                    double iou_threshold) {
    std::sort(dets.begin(), dets.end(), detection_before);

    MatchResult result;
    result.gt_count = gts.size();
    result.iou_threshold = iou_threshold;
    result.entries.reserve(dets.size());

    std::vector<bool> taken(gts.size(), false);
    for (const Detection& d : dets) {
        double best_iou = iou_threshold;
        std::ptrdiff_t best = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g] || gts[g].class_id != d.class_id) continue;
            const double overlap = iou(d.box, gts[g].box);
            if (overlap > best_iou) {
                best_iou = overlap;
                best = static_cast<std::ptrdiff_t>(g);
            }
        }
        if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
        result.entries.push_back({d.score, best >= 0});
    }
    return result;
}

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// Raw precision/recall sweep over the pooled matches of one class, one
/// point per distinct score (whole tie groups are consumed before a point
/// is emitted). Requires at least one ground-truth box.
inline std::vector<PrPoint> pr_curve(const std::vector<MatchResult>& results) {
    std::uint64_t total_gt = 0;
    std::vector<ScoredMatch> pooled;
    for (const MatchResult& r : results) {
        total_gt += r.gt_count;
        pooled.insert(pooled.end(), r.entries.begin(), r.entries.end());
    }
    if (total_gt == 0)
        throw DataError("pr_curve: no ground-truth boxes for this class");

    std::sort(pooled.begin(), pooled.end(),
              [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });

    std::vector<PrPoint> pts;
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        const double s = pooled[i].score;
        while (i < pooled.size() && pooled[i].score == s) {
            (pooled[i].is_tp ? tp : fp)++;
            ++i;
        }
        pts.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    return pts;
}

/// Average precision for one class: the PR sweep with the precision
/// envelope taken from the right, integrated with all-point interpolation.
inline double average_precision(const std::vector<MatchResult>& results) {
    std::vector<PrPoint> pts = pr_curve(results);
    if (pts.empty()) return 0.0;

    // envelope: best precision attainable at this recall or beyond
    for (std::size_t k = pts.size(); k-- > 1;)
        pts[k - 1].precision = std::max(pts[k - 1].precision, pts[k].precision);

    double ap = 0.0;
    double prev_recall = 0.0;
    for (const PrPoint& p : pts) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

/// Mean over per-class AP values.
inline double mean_ap(const std::map<int, double>& ap_per_class) {
    if (ap_per_class.empty()) throw DataError("mean_ap: no classes with ground truth");
    double sum = 0.0;
    for (const auto& [cls, ap] : ap_per_class) sum += ap;
    return sum / static_cast<double>(ap_per_class.size());
}

// ---------------------------------------------------------------------------
// Operating-point detection metrics
// ---------------------------------------------------------------------------

struct DetectionPRF {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 at a fixed score threshold, counting only detections
/// scoring at or above it. Sound because of the greedy prefix property noted
/// at match_detections.
inline DetectionPRF detection_prf(const std::vector<MatchResult>& results,
                                  double score_threshold) {
    DetectionPRF out;
    std::uint64_t total_gt = 0;
    for (const MatchResult& r : results) {
        total_gt += r.gt_count;
        for (const ScoredMatch& e : r.entries) {
            if (e.score < score_threshold) continue;
            (e.is_tp ? out.tp : out.fp)++;
        }
    }
    out.fn = total_gt - out.tp;
    const std::uint64_t pred = out.tp + out.fp;
    out.precision = pred == 0 ? 0.0 : static_cast<double>(out.tp) / static_cast<double>(pred);
    out.recall = total_gt == 0 ? 0.0 : static_cast<double>(out.tp) / static_cast<double>(total_gt);
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

} // namespace pedet
