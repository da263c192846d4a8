#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"

namespace pedet {

/// Slice-level classifier output: probability that the image contains any
/// finding at all.
struct ClassifierVerdict {
    std::string image_id;
    double p = 0.0;
};

struct GuidanceConfig {
    double theta = 0.5;       // classifier probability needed to trust the image
    double conf_floor = 0.018; // per-box survival bar on distrusted images

    void validate() const {
        if (!(theta >= 0.0 && theta <= 1.0))
            throw ConfigError("guidance theta must lie in [0,1]");
        if (!(conf_floor >= 0.0 && conf_floor <= 1.0))
            throw ConfigError("guidance confidence floor must lie in [0,1]");
    }
};

/// Classifier-guided filtering for one image. When the classifier is
/// confident the slice is positive (p >= theta) every detection survives.
/// Otherwise only detections scoring strictly above the confidence floor
/// are kept. Input order is preserved.
inline std::vector<Detection> guided_filter(const std::vector<Detection>& dets,
                                            const ClassifierVerdict& verdict,
                                            const GuidanceConfig& cfg) {
    cfg.validate();
    for (const Detection& d : dets)
        if (d.image_id != verdict.image_id)
            throw DataError("guided_filter: detection for image '" + d.image_id +
                            "' does not match verdict for image '" + verdict.image_id + "'");

    if (verdict.p >= cfg.theta) return dets;

    std::vector<Detection> kept;
    for (const Detection& d : dets)
        if (d.score > cfg.conf_floor) kept.push_back(d);
    return kept;
}

/// Dataset-level guidance. Detections are grouped by image and filtered
/// against that image's verdict; relative order within each image is kept.
/// Every image with detections must have exactly one verdict.
inline std::map<std::string, std::vector<Detection>>
guided_filter_dataset(const std::map<std::string, std::vector<Detection>>& per_image,
                      const std::vector<ClassifierVerdict>& verdicts,
                      const GuidanceConfig& cfg) {
    cfg.validate();

    std::map<std::string, ClassifierVerdict> by_image;
    for (const ClassifierVerdict& v : verdicts) {
        auto [it, inserted] = by_image.emplace(v.image_id, v);
        if (!inserted)
            throw DataError("duplicate classifier verdict for image '" + v.image_id + "'");
    }

    std::set<std::string> missing;
    for (const auto& [image_id, dets] : per_image)
        if (!dets.empty() && !by_image.count(image_id)) missing.insert(image_id);
    if (!missing.empty()) {
        std::string msg = "missing classifier verdict for image(s):";
        for (const std::string& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    std::map<std::string, std::vector<Detection>> out;
    for (const auto& [image_id, dets] : per_image) {
        if (dets.empty()) {
            out.emplace(image_id, dets);
            continue;
        }
        out.emplace(image_id, guided_filter(dets, by_image.at(image_id), cfg));
    }
    return out;
}

} // namespace pedet
