#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"

namespace pedet {

enum class FusionMethod { NMS, NMW, WBF };

inline const char* to_string(FusionMethod m) {
    switch (m) {
        case FusionMethod::NMS: return "nms";
        case FusionMethod::NMW: return "nmw";
        case FusionMethod::WBF: return "wbf";
    }
    return "?";
}

inline FusionMethod fusion_method_from_string(const std::string& s) {
    if (s == "nms" || s == "NMS") return FusionMethod::NMS;
    if (s == "nmw" || s == "NMW") return FusionMethod::NMW;
    if (s == "wbf" || s == "WBF") return FusionMethod::WBF;
    throw ConfigError("unknown fusion method '" + s + "' (expected nms, nmw or wbf)");
}

/// Per-model score weights. A model missing from the map falls back to
/// default_weight; with no default declared an unknown model is a
/// configuration error.
struct ModelWeights {
    std::map<std::string, double> weights;
    std::optional<double> default_weight;

    static ModelWeights uniform() { return ModelWeights{{}, 1.0}; }

    void validate() const {
        for (const auto& [model, w] : weights)
            if (!(w > 0.0))
                throw ConfigError("model weight for '" + model + "' must be positive");
        if (default_weight && !(*default_weight > 0.0))
            throw ConfigError("default model weight must be positive");
    }

    double weight_for(const std::string& model_id) const {
        auto it = weights.find(model_id);
        if (it != weights.end()) return it->second;
        if (default_weight) return *default_weight;
        throw ConfigError("no weight declared for model '" + model_id + "' and no default given");
    }

    /// Largest declared weight (map entries plus the default, when set).
    /// Scores are scaled relative to this so the top model is unchanged.
    double max_weight() const {
        double m = default_weight.value_or(0.0);
        for (const auto& [model, w] : weights) m = std::max(m, w);
        return m > 0.0 ? m : 1.0;
    }
};

struct FusionConfig {
    FusionMethod method = FusionMethod::WBF;
    double iou_threshold = 0.3;
    double score_floor = 0.005;

    void validate() const {
        if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
            throw ConfigError("fusion iou threshold must lie in (0,1)");
        if (!(score_floor >= 0.0 && score_floor <= 1.0))
            throw ConfigError("fusion score floor must lie in [0,1]");
    }
};

/// Rescale every score by weight(model)/max_weight. The top-weighted model
/// keeps its scores; lower-weighted models are scaled down proportionally,
/// which keeps everything inside [0,1]. Order is preserved.
inline std::vector<Detection> apply_model_weights(const std::vector<Detection>& dets,
                                                  const ModelWeights& w) {
    w.validate();
    const double max_w = w.max_weight();
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (const Detection& d : dets) {
        Detection scaled = d;
        scaled.score = d.score * w.weight_for(d.model_id) / max_w;
        out.push_back(std::move(scaled));
    }
    return out;
}

namespace detail {

inline std::vector<Detection> sorted_canonical(std::vector<Detection> dets) {
    std::sort(dets.begin(), dets.end(), detection_before);
    return dets;
}

} // namespace detail

/// Greedy non-maximum suppression: repeatedly keep the best remaining box
/// and drop everything overlapping it by more than t. Output stays sorted
/// descending by score. All inputs must share one image and class.
inline std::vector<Detection> nms(std::vector<Detection> dets, double t) {
    dets = detail::sorted_canonical(std::move(dets));
    std::vector<Detection> kept;
    std::vector<bool> removed(dets.size(), false);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (removed[i]) continue;
        kept.push_back(dets[i]);
        for (std::size_t j = i + 1; j < dets.size(); ++j) {
            if (!removed[j] && iou(dets[i].box, dets[j].box) > t) removed[j] = true;
        }
    }
    return kept;
}

/// Non-maximum weighted merging. The best remaining box seeds a cluster and
/// every remaining box overlapping the seed by more than t joins it. Cluster
/// coordinates are the normalized weighted mean with weight score(seed) for
/// the seed and iou(seed,b)*score(b) for members; the output keeps the
/// seed's score and model tag.
inline std::vector<Detection> nmw(std::vector<Detection> dets, double t) {
    dets = detail::sorted_canonical(std::move(dets));
    std::vector<Detection> fused;
    std::vector<bool> used(dets.size(), false);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (used[i]) continue;
        const Detection& seed = dets[i];
        used[i] = true;

        double wsum = seed.score;
        BBox acc{seed.score * seed.box.x_min, seed.score * seed.box.y_min,
                 seed.score * seed.box.x_max, seed.score * seed.box.y_max};
        for (std::size_t j = i + 1; j < dets.size(); ++j) {
            if (used[j]) continue;
            const double overlap = iou(seed.box, dets[j].box);
            if (overlap <= t) continue;
            used[j] = true;
            const double w = overlap * dets[j].score;
            acc.x_min += w * dets[j].box.x_min;
            acc.y_min += w * dets[j].box.y_min;
            acc.x_max += w * dets[j].box.x_max;
            acc.y_max += w * dets[j].box.y_max;
            wsum += w;
        }

        Detection out = seed;
        if (wsum > 0.0)
            out.box = BBox{acc.x_min / wsum, acc.y_min / wsum, acc.x_max / wsum, acc.y_max / wsum};
        fused.push_back(std::move(out));
    }
    return fused;
}

/// Weighted boxes fusion. Boxes are consumed in descending score order; each
/// either joins the fused box it overlaps most (iou > t, against the fused
/// box's current coordinates) or starts a new one. Fused coordinates are the
/// score-weighted mean of all members; the fused score is the member mean.
inline std::vector<Detection> wbf(std::vector<Detection> dets, double t) {
    dets = detail::sorted_canonical(std::move(dets));

    struct Cluster {
        std::vector<Detection> members;
        Detection fused; // coordinates kept current as members join
    };
    std::vector<Cluster> clusters;

    auto refresh = [](Cluster& c) {
        double wsum = 0.0;
        double ssum = 0.0;
        BBox acc{0, 0, 0, 0};
        for (const Detection& m : c.members) {
            acc.x_min += m.score * m.box.x_min;
            acc.y_min += m.score * m.box.y_min;
            acc.x_max += m.score * m.box.x_max;
            acc.y_max += m.score * m.box.y_max;
            wsum += m.score;
            ssum += m.score;
        }
        if (wsum > 0.0) {
            c.fused.box = BBox{acc.x_min / wsum, acc.y_min / wsum, acc.x_max / wsum, acc.y_max / wsum};
        } else {
            // All-zero scores: fall back to the unweighted member mean.
            acc = BBox{0, 0, 0, 0};
            for (const Detection& m : c.members) {
                acc.x_min += m.box.x_min;
                acc.y_min += m.box.y_min;
                acc.x_max += m.box.x_max;
                acc.y_max += m.box.y_max;
            }
            const double n = static_cast<double>(c.members.size());
            c.fused.box = BBox{acc.x_min / n, acc.y_min / n, acc.x_max / n, acc.y_max / n};
        }
        c.fused.score = ssum / static_cast<double>(c.members.size());
    };

    for (const Detection& d : dets) {
        double best_iou = t;
        std::ptrdiff_t best = -1;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const double overlap = iou(clusters[c].fused.box, d.box);
            if (overlap > best_iou) {
                best_iou = overlap;
                best = static_cast<std::ptrdiff_t>(c);
            }
        }
        if (best < 0) {
            Cluster c;
            c.fused = d;
            c.members.push_back(d);
            clusters.push_back(std::move(c));
        } else {
            clusters[static_cast<std::size_t>(best)].members.push_back(d);
            refresh(clusters[static_cast<std::size_t>(best)]);
        }
    }

    std::vector<Detection> fused;
    fused.reserve(clusters.size());
    for (Cluster& c : clusters) fused.push_back(std::move(c.fused));
    std::sort(fused.begin(), fused.end(), detection_before);
    return fused;
}

/// Full single-image ensemble: weight scores, pool all models, drop
/// detections below the score floor, then fuse per class with the
/// configured method. Output is sorted by the canonical ordering.
inline std::vector<Detection> ensemble(const std::map<std::string, std::vector<Detection>>& per_model,
                                       const FusionConfig& cfg, const ModelWeights& w) {
    cfg.validate();

    std::vector<Detection> pooled;
    for (const auto& [model, dets] : per_model)
        for (const Detection& d : apply_model_weights(dets, w))
            if (d.score >= cfg.score_floor) pooled.push_back(d);

    std::map<std::pair<std::string, int>, std::vector<Detection>> groups;
    for (Detection& d : pooled) groups[{d.image_id, d.class_id}].push_back(std::move(d));

    std::vector<Detection> out;
    for (auto& [key, group] : groups) {
        std::vector<Detection> fused;
        switch (cfg.method) {
            case FusionMethod::NMS: fused = nms(std::move(group), cfg.iou_threshold); break;
            case FusionMethod::NMW: fused = nmw(std::move(group), cfg.iou_threshold); break;
            case FusionMethod::WBF: fused = wbf(std::move(group), cfg.iou_threshold); break;
        }
        out.insert(out.end(), fused.begin(), fused.end());
    }
    std::sort(out.begin(), out.end(), detection_before);
    return out;
}

} // namespace pedet
