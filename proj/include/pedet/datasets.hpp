#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"
#include "pedet/imaging.hpp"

namespace pedet {

struct AnnotationBox {
    int class_id = 0;
    BBox box;
};

struct ImageRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    SliceLabel label = SliceLabel::NonPE;
    std::optional<std::string> mask_ref;
    std::vector<AnnotationBox> annotations;
};

struct PatientRecord {
    std::string patient_id;
    std::optional<std::string> split;
    std::vector<ImageRecord> images;
};

struct DatasetManifest {
    std::vector<PatientRecord> patients;

    std::size_t image_count() const {
        std::size_t n = 0;
        for (const PatientRecord& p : patients) n += p.images.size();
        return n;
    }
};

// ---------------------------------------------------------------------------
// Patient-wise splitting
// ---------------------------------------------------------------------------

/// Named fractions in declaration order; order breaks apportionment ties.
struct SplitSpec {
    std::vector<std::pair<std::string, double>> fractions;
    std::uint32_t seed = 0;

    void validate() const {
        if (fractions.empty()) throw ConfigError("split spec declares no splits");
        double sum = 0.0;
        for (const auto& [name, f] : fractions) {
            if (name.empty()) throw ConfigError("split name must be nonempty");
            if (!(f > 0.0)) throw ConfigError("split fraction for '" + name + "' must be positive");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("split fractions must sum to 1");
        for (std::size_t i = 0; i < fractions.size(); ++i)
            for (std::size_t j = i + 1; j < fractions.size(); ++j)
                if (fractions[i].first == fractions[j].first)
                    throw ConfigError("duplicate split name '" + fractions[i].first + "'");
    }
};

/// Assign whole patients to splits. Patient ids are permuted by a seeded
/// mt19937 Fisher-Yates shuffle (j = gen() % (i+1); mt19937 output is
/// bit-specified, so the permutation is identical on every platform) and
/// then cut into consecutive runs. Run lengths come from largest-remainder
/// apportionment of fraction*N: floors first, leftovers to the largest
/// fractional remainders, remainder ties to the earlier-declared split.
inline std::map<std::string, std::vector<std::string>>
patient_split(const DatasetManifest& manifest, const SplitSpec& spec) {
    spec.validate();

    std::vector<std::string> ids;
    ids.reserve(manifest.patients.size());
    for (const PatientRecord& p : manifest.patients) ids.push_back(p.patient_id);

    const std::size_t n = ids.size();
    if (spec.fractions.size() > n)
        throw DataError("more splits than patients (" + std::to_string(spec.fractions.size()) +
                        " splits, " + std::to_string(n) + " patients)");

    std::mt19937 gen(spec.seed);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = gen() % (i + 1);
        std::swap(ids[i], ids[j]);
    }

    const std::size_t k = spec.fractions.size();
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders(k); // (-remainder, index) for stable sort
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < k; ++s) {
        const double quota = spec.fractions[s].second * static_cast<double>(n);
        counts[s] = static_cast<std::size_t>(std::floor(quota));
        remainders[s] = {-(quota - std::floor(quota)), s};
        assigned += counts[s];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned)
        counts[remainders[r % k].second]++;

    for (std::size_t s = 0; s < k; ++s)
        if (counts[s] == 0)
            throw DataError("split '" + spec.fractions[s].first + "' is empty after rounding");

    std::map<std::string, std::vector<std::string>> out;
    std::size_t next = 0;
    for (std::size_t s = 0; s < k; ++s) {
        std::vector<std::string>& bucket = out[spec.fractions[s].first];
        bucket.assign(ids.begin() + next, ids.begin() + next + counts[s]);
        next += counts[s];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string kind;
    std::string message;
};

/// Resolves a mask reference to a mask, or nullopt when it cannot be loaded.
using MaskLoader = std::function<std::optional<BinaryMask>(const std::string&)>;

/// Structural checks over a parsed manifest. Violations are returned, never
/// thrown: a broken manifest is data to report on. Mask consistency (label
/// is PE iff the referenced mask has foreground) is only checked when a
/// loader is supplied.
inline std::vector<Violation> validate_manifest(const DatasetManifest& manifest,
                                                const MaskLoader& load_mask = nullptr) {
    std::vector<Violation> out;

    std::map<std::string, std::string> patient_seen;
    std::map<std::string, std::string> image_owner;
    for (const PatientRecord& p : manifest.patients) {
        auto [pit, fresh] = patient_seen.emplace(p.patient_id, p.patient_id);
        if (!fresh)
            out.push_back({"duplicate_patient", "patient '" + p.patient_id + "' declared twice"});

        for (const ImageRecord& img : p.images) {
            auto [iit, unique] = image_owner.emplace(img.image_id, p.patient_id);
            if (!unique) {
                out.push_back({"duplicate_image",
                               "image '" + img.image_id + "' listed under patients '" +
                                   iit->second + "' and '" + p.patient_id + "'"});
                continue;
            }

            if (img.width <= 0 || img.height <= 0) {
                out.push_back({"bad_dimensions",
                               "image '" + img.image_id + "' has nonpositive dimensions"});
                continue;
            }

            for (const AnnotationBox& a : img.annotations) {
                if (!a.box.valid() || a.box.x_min < 0.0 || a.box.y_min < 0.0 ||
                    a.box.x_max > static_cast<double>(img.width) ||
                    a.box.y_max > static_cast<double>(img.height)) {
                    out.push_back({"annotation_bounds",
                                   "annotation on image '" + img.image_id +
                                       "' falls outside the image"});
                }
            }

            if (img.label == SliceLabel::NonPE && !img.annotations.empty())
                out.push_back({"label_annotation",
                               "image '" + img.image_id + "' is NonPE but carries annotations"});

            if (img.mask_ref && load_mask) {
                const std::optional<BinaryMask> mask = load_mask(*img.mask_ref);
                if (!mask) {
                    out.push_back({"mask_missing",
                                   "mask '" + *img.mask_ref + "' for image '" + img.image_id +
                                       "' cannot be loaded"});
                } else if (mask_to_label(*mask) != img.label) {
                    out.push_back({"label_mask",
                                   "image '" + img.image_id + "' is labeled " +
                                       to_string(img.label) + " but its mask says " +
                                       to_string(mask_to_label(*mask))});
                }
            }
        }
    }
    return out;
}

} // namespace pedet
