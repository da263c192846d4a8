#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "pedet/errors.hpp"

namespace pedet {

/// Axis-aligned rectangle in continuous pixel coordinates. Width is
/// x_max - x_min (corner-exclusive), so fused boxes with fractional
/// corners stay well defined.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
    }

    friend bool operator==(const BBox& a, const BBox& b) {
        return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
               a.y_max == b.y_max;
    }

    friend bool operator<(const BBox& a, const BBox& b) {
        return std::tie(a.x_min, a.y_min, a.x_max, a.y_max) <
               std::tie(b.x_min, b.y_min, b.x_max, b.y_max);
    }
};

inline double area(const BBox& b) {
    return (b.x_max - b.x_min) * (b.y_max - b.y_min);
}

/// Intersection over union. Two degenerate boxes (union 0) give 0 so the
/// fusion passes never see a NaN.
inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = area(a) + area(b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// One detector output: a scored box tagged with the image and model it came from.
struct Detection {
    std::string image_id;
    std::string model_id;
    int class_id = 0;
    BBox box;
    double score = 0.0;

    friend bool operator==(const Detection& a, const Detection& b) {
        return a.image_id == b.image_id && a.model_id == b.model_id &&
               a.class_id == b.class_id && a.box == b.box && a.score == b.score;
    }
};

/// Canonical ordering used everywhere boxes are ranked: descending score,
/// ties by model_id, then box corners, then class and image. Total on
/// distinct records, which makes every greedy pass permutation invariant.
inline bool detection_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.model_id != b.model_id) return a.model_id < b.model_id;
    if (!(a.box == b.box)) return a.box < b.box;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return a.image_id < b.image_id;
}

inline void validate_detection(const Detection& d, const std::string& context) {
    if (!d.box.valid())
        throw DataError(context + ": invalid box for image '" + d.image_id + "'");
    if (!(d.score >= 0.0 && d.score <= 1.0))
        throw DataError(context + ": score outside [0,1] for image '" + d.image_id + "'");
}

} // namespace pedet
