#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"

namespace pedet {

struct HUImage {
    int width = 0;
    int height = 0;
    std::vector<std::int16_t> data; // row-major

    std::int16_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

struct Heatmap {
    int width = 0;
    int height = 0;
    std::vector<double> data; // values in [0,1]

    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

/// 0 = background, 1 = foreground.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

enum class SliceLabel { PE, NonPE };

inline const char* to_string(SliceLabel l) { return l == SliceLabel::PE ? "PE" : "NonPE"; }

inline SliceLabel slice_label_from_string(const std::string& s) {
    if (s == "PE") return SliceLabel::PE;
    if (s == "NonPE") return SliceLabel::NonPE;
    throw ParseError("unknown slice label '" + s + "' (expected PE or NonPE)");
}

// ---------------------------------------------------------------------------
// CT windowing
// ---------------------------------------------------------------------------

/// Mediastinal defaults; anything with a positive width is acceptable.
struct WindowSpec {
    double level = 40.0;
    double width = 400.0;

    void validate() const {
        if (!(width > 0.0)) throw ConfigError("window width must be positive");
    }
};

/// Map HU to 8-bit gray: scale the window [level - width/2, level + width/2]
/// onto [0,255], round half away from zero, clamp.
inline GrayImage window(const HUImage& img, const WindowSpec& spec) {
    spec.validate();
    const double lo = spec.level - spec.width / 2.0;
    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double g = std::round(255.0 * (static_cast<double>(img.data[i]) - lo) / spec.width);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0));
    }
    return out;
}

/// 8-bit quantization of a unit-range heatmap, same rounding as window().
inline GrayImage quantize_heatmap(const Heatmap& h) {
    GrayImage out;
    out.width = h.width;
    out.height = h.height;
    out.data.resize(h.data.size());
    for (std::size_t i = 0; i < h.data.size(); ++i) {
        const double g = std::round(255.0 * h.data[i]);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Otsu thresholding
// ---------------------------------------------------------------------------

inline std::array<std::uint64_t, 256> histogram256(const GrayImage& img) {
    std::array<std::uint64_t, 256> h{};
    for (std::uint8_t v : img.data) h[v]++;
    return h;
}

struct OtsuResult {
    int threshold = 0;
    bool degenerate = false; // single gray level, no split exists
};

/// Otsu's threshold from a 256-bin histogram. For each candidate tau the
/// split is background <= tau, foreground > tau, and the between-class
/// variance is maximized. With cumulative count w0 and sum s0 on the
/// background side (w1, s1 opposite), the variance is proportional to
///
///     (s0*w1 - s1*w0)^2 / (w0*w1)
///
/// which needs no means and no division until the end. The cumulative stats
/// are exact integers, so the double-precision value of this expression is
/// reproducible and ties can be broken exactly toward the smallest tau.
inline OtsuResult otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
    std::uint64_t n = 0, total = 0;
    for (int v = 0; v < 256; ++v) {
        n += hist[v];
        total += static_cast<std::uint64_t>(v) * hist[v];
    }
    if (n == 0) throw DataError("otsu: empty histogram");

    OtsuResult result;
    double best = -1.0;
    std::uint64_t w0 = 0, s0 = 0;
    for (int tau = 0; tau < 255; ++tau) {
        w0 += hist[tau];
        s0 += static_cast<std::uint64_t>(tau) * hist[tau];
        const std::uint64_t w1 = n - w0;
        if (w0 == 0 || w1 == 0) continue;
        const std::uint64_t s1 = total - s0;
        const double d = static_cast<double>(s0) * static_cast<double>(w1) -
                         static_cast<double>(s1) * static_cast<double>(w0);
        const double score = d * d / (static_cast<double>(w0) * static_cast<double>(w1));
        if (score > best) {
            best = score;
            result.threshold = tau;
        }
    }

    if (best < 0.0) {
        // constant image: report the single level and flag it
        for (int v = 0; v < 256; ++v) {
            if (hist[v] > 0) {
                result.threshold = v;
                break;
            }
        }
        result.degenerate = true;
    }
    return result;
}

inline OtsuResult otsu_threshold(const GrayImage& img) {
    if (img.data.empty()) throw DataError("otsu: empty image");
    return otsu_threshold(histogram256(img));
}

/// Foreground = strictly above tau.
inline BinaryMask binarize(const GrayImage& img, int tau) {
    BinaryMask m;
    m.width = img.width;
    m.height = img.height;
    m.data.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i)
        m.data[i] = img.data[i] > tau ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

/// One 8-connected foreground region. Pixel bounds are inclusive.
struct Component {
    std::uint64_t size = 0;
    int r_min = 0, r_max = 0, c_min = 0, c_max = 0;
};

/// All 8-connected components in row-major discovery order of their first
/// pixel.
inline std::vector<Component> connected_components(const BinaryMask& mask) {
    std::vector<Component> comps;
    std::vector<std::uint8_t> seen(mask.data.size(), 0);
    std::vector<std::pair<int, int>> stack;

    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * mask.width + c;
            if (!mask.data[idx] || seen[idx]) continue;

            Component comp{0, r, r, c, c};
            seen[idx] = 1;
            stack.push_back({r, c});
            while (!stack.empty()) {
                auto [cr, cc] = stack.back();
                stack.pop_back();
                comp.size++;
                comp.r_min = std::min(comp.r_min, cr);
                comp.r_max = std::max(comp.r_max, cr);
                comp.c_min = std::min(comp.c_min, cc);
                comp.c_max = std::max(comp.c_max, cc);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nr >= mask.height || nc < 0 || nc >= mask.width) continue;
                        const std::size_t nidx = static_cast<std::size_t>(nr) * mask.width + nc;
                        if (!mask.data[nidx] || seen[nidx]) continue;
                        seen[nidx] = 1;
                        stack.push_back({nr, nc});
                    }
                }
            }
            comps.push_back(comp);
        }
    }
    return comps;
}

/// Largest component, ties going to the one discovered first in scan order.
/// Empty mask yields size 0.
inline Component largest_component(const BinaryMask& mask) {
    Component best;
    for (const Component& c : connected_components(mask))
        if (c.size > best.size) best = c;
    return best;
}

// ---------------------------------------------------------------------------
// Attention crops and mask-derived records
// ---------------------------------------------------------------------------

/// Half-open pixel box [c_min, r_min, c_max+1, r_max+1] for a component.
inline BBox component_box(const Component& comp) {
    return BBox{static_cast<double>(comp.c_min), static_cast<double>(comp.r_min),
                static_cast<double>(comp.c_max + 1), static_cast<double>(comp.r_max + 1)};
}

/// Crop box from an attention heatmap: quantize to 8 bits, Otsu, keep the
/// largest foreground blob and scale its pixel box up to image coordinates.
/// A degenerate threshold or an empty mask falls back to the whole image.
inline BBox attention_crop(const Heatmap& heat, int image_width, int image_height) {
    if (heat.width <= 0 || heat.height <= 0 || heat.data.empty())
        throw DataError("attention_crop: empty heatmap");
    if (image_width <= 0 || image_height <= 0)
        throw ConfigError("attention_crop: image dimensions must be positive");

    const BBox full{0.0, 0.0, static_cast<double>(image_width), static_cast<double>(image_height)};
    const GrayImage q = quantize_heatmap(heat);
    const OtsuResult otsu = otsu_threshold(q);
    if (otsu.degenerate) return full;

    const Component comp = largest_component(binarize(q, otsu.threshold));
    if (comp.size == 0) return full;

    const double sx = static_cast<double>(image_width) / heat.width;
    const double sy = static_cast<double>(image_height) / heat.height;
    const BBox pix = component_box(comp);
    return BBox{pix.x_min * sx, pix.y_min * sy, pix.x_max * sx, pix.y_max * sy};
}

/// A slice is PE iff its mask has any foreground at all.
inline SliceLabel mask_to_label(const BinaryMask& mask) {
    for (std::uint8_t v : mask.data)
        if (v) return SliceLabel::PE;
    return SliceLabel::NonPE;
}

/// One annotation box per component, in discovery order: the tight half-open
/// pixel box grown by margin on every side and clamped to the mask bounds.
inline std::vector<BBox> mask_to_annotations(const BinaryMask& mask, double margin = 0.0) {
    if (margin < 0.0) throw ConfigError("mask_to_annotations: margin must be nonnegative");
    std::vector<BBox> boxes;
    for (const Component& comp : connected_components(mask)) {
        BBox b = component_box(comp);
        b.x_min = std::max(0.0, b.x_min - margin);
        b.y_min = std::max(0.0, b.y_min - margin);
        b.x_max = std::min(static_cast<double>(mask.width), b.x_max + margin);
        b.y_max = std::min(static_cast<double>(mask.height), b.y_max + margin);
        boxes.push_back(b);
    }
    return boxes;
}

} // namespace pedet
