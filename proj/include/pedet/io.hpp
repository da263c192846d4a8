#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pedet/datasets.hpp"
#include "pedet/errors.hpp"
#include "pedet/geometry.hpp"
#include "pedet/guidance.hpp"
#include "pedet/imaging.hpp"
#include "pedet/metrics.hpp"

namespace pedet {

/// All numeric text output uses fixed six decimals so reruns diff cleanly.
inline std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Line-oriented container shared by every text format
//
// First line:  pedet-<kind> <version>
// Afterwards:  whitespace-separated tokens; blank lines and lines starting
//              with '#' are ignored.
// ---------------------------------------------------------------------------

struct TextLine {
    int number = 0; // 1-based line number in the file
    std::vector<std::string> tokens;
};

struct TextDoc {
    std::string path;
    int version = 0;
    std::vector<TextLine> lines;
};

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(std::move(t));
    return toks;
}

inline std::string at_line(const TextDoc& doc, const TextLine& line) {
    return doc.path + ":" + std::to_string(line.number);
}

inline double parse_num(const TextDoc& doc, const TextLine& line, std::size_t idx,
                        const char* what) {
    const std::string& tok = line.tokens[idx];
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw ParseError(at_line(doc, line) + ": bad " + what + " '" + tok + "'");
    return v;
}

inline long long parse_int(const TextDoc& doc, const TextLine& line, std::size_t idx,
                           const char* what) {
    const std::string& tok = line.tokens[idx];
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size())
        throw ParseError(at_line(doc, line) + ": bad " + what + " '" + tok + "'");
    return v;
}

inline void require_tokens(const TextDoc& doc, const TextLine& line, std::size_t lo,
                           std::size_t hi, const char* usage) {
    if (line.tokens.size() < lo || line.tokens.size() > hi)
        throw ParseError(at_line(doc, line) + ": expected '" + usage + "', got " +
                         std::to_string(line.tokens.size()) + " token(s)");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

} // namespace detail

inline TextDoc read_text_doc(const std::string& path, const std::string& kind) {
    std::ifstream in = detail::open_in(path);
    TextDoc doc;
    doc.path = path;

    std::string raw;
    int number = 0;
    bool saw_header = false;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::size_t first = raw.find_first_not_of(" \t");
        if (first == std::string::npos || raw[first] == '#') continue;

        std::vector<std::string> toks = detail::split_tokens(raw);
        if (!saw_header) {
            const std::string magic = "pedet-" + kind;
            if (toks.size() != 2 || toks[0] != magic)
                throw ParseError(path + ":" + std::to_string(number) + ": expected header '" +
                                 magic + " <version>'");
            TextDoc probe;
            probe.path = path;
            TextLine hl{number, toks};
            doc.version = static_cast<int>(detail::parse_int(probe, hl, 1, "version"));
            if (doc.version != 1)
                throw ParseError(path + ":" + std::to_string(number) + ": unsupported " + kind +
                                 " version " + std::to_string(doc.version));
            saw_header = true;
            continue;
        }
        doc.lines.push_back(TextLine{number, std::move(toks)});
    }
    if (!saw_header)
        throw ParseError(path + ": empty file, expected 'pedet-" + kind + " <version>' header");
    return doc;
}

// ---------------------------------------------------------------------------
// Predictions:  image_id model_id class_id x_min y_min x_max y_max score
// ---------------------------------------------------------------------------

inline std::vector<Detection> read_predictions(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "predictions");
    std::vector<Detection> out;
    out.reserve(doc.lines.size());
    for (const TextLine& line : doc.lines) {
        detail::require_tokens(doc, line, 8, 8,
                               "image_id model_id class_id x_min y_min x_max y_max score");
        Detection d;
        d.image_id = line.tokens[0];
        d.model_id = line.tokens[1];
        d.class_id = static_cast<int>(detail::parse_int(doc, line, 2, "class_id"));
        d.box = BBox{detail::parse_num(doc, line, 3, "x_min"),
                     detail::parse_num(doc, line, 4, "y_min"),
                     detail::parse_num(doc, line, 5, "x_max"),
                     detail::parse_num(doc, line, 6, "y_max")};
        d.score = detail::parse_num(doc, line, 7, "score");
        if (!d.box.valid())
            throw ParseError(detail::at_line(doc, line) + ": degenerate box (min > max)");
        if (d.score < 0.0 || d.score > 1.0)
            throw ParseError(detail::at_line(doc, line) + ": score outside [0,1]");
        out.push_back(std::move(d));
    }
    return out;
}

inline void write_predictions(const std::string& path, const std::vector<Detection>& dets) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-predictions 1\n";
    for (const Detection& d : dets) {
        out << d.image_id << ' ' << d.model_id << ' ' << d.class_id << ' '
            << format_fixed(d.box.x_min) << ' ' << format_fixed(d.box.y_min) << ' '
            << format_fixed(d.box.x_max) << ' ' << format_fixed(d.box.y_max) << ' '
            << format_fixed(d.score) << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Classifier verdicts:  image_id p
// ---------------------------------------------------------------------------

inline std::vector<ClassifierVerdict> read_verdicts(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "verdicts");
    std::vector<ClassifierVerdict> out;
    out.reserve(doc.lines.size());
    for (const TextLine& line : doc.lines) {
        detail::require_tokens(doc, line, 2, 2, "image_id p");
        ClassifierVerdict v;
        v.image_id = line.tokens[0];
        v.p = detail::parse_num(doc, line, 1, "probability");
        if (v.p < 0.0 || v.p > 1.0)
            throw ParseError(detail::at_line(doc, line) + ": probability outside [0,1]");
        out.push_back(std::move(v));
    }
    return out;
}

inline void write_verdicts(const std::string& path, const std::vector<ClassifierVerdict>& vs) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-verdicts 1\n";
    for (const ClassifierVerdict& v : vs)
        out << v.image_id << ' ' << format_fixed(v.p) << '\n';
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Ground truth:  image_id class_id x_min y_min x_max y_max
// ---------------------------------------------------------------------------

inline std::vector<GroundTruthBox> read_ground_truth(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "groundtruth");
    std::vector<GroundTruthBox> out;
    out.reserve(doc.lines.size());
    for (const TextLine& line : doc.lines) {
        detail::require_tokens(doc, line, 6, 6, "image_id class_id x_min y_min x_max y_max");
        GroundTruthBox g;
        g.image_id = line.tokens[0];
        g.class_id = static_cast<int>(detail::parse_int(doc, line, 1, "class_id"));
        g.box = BBox{detail::parse_num(doc, line, 2, "x_min"),
                     detail::parse_num(doc, line, 3, "y_min"),
                     detail::parse_num(doc, line, 4, "x_max"),
                     detail::parse_num(doc, line, 5, "y_max")};
        if (!g.box.valid())
            throw ParseError(detail::at_line(doc, line) + ": degenerate box (min > max)");
        out.push_back(std::move(g));
    }
    return out;
}

inline void write_ground_truth(const std::string& path, const std::vector<GroundTruthBox>& gts) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-groundtruth 1\n";
    for (const GroundTruthBox& g : gts) {
        out << g.image_id << ' ' << g.class_id << ' ' << format_fixed(g.box.x_min) << ' '
            << format_fixed(g.box.y_min) << ' ' << format_fixed(g.box.x_max) << ' '
            << format_fixed(g.box.y_max) << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Dataset manifest
//
//   patient <patient_id> [split]
//   image <image_id> <width> <height> <PE|NonPE> [mask_ref]
//   annotation <image_id> <class_id> <x_min> <y_min> <x_max> <y_max>
//
// Image lines belong to the most recent patient line; annotations attach by
// image id and may appear anywhere after the header.
// ---------------------------------------------------------------------------

inline DatasetManifest read_manifest(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "manifest");
    DatasetManifest manifest;

    struct PendingAnnotation {
        const TextLine* line;
        std::string image_id;
        AnnotationBox box;
    };
    std::vector<PendingAnnotation> pending;

    for (const TextLine& line : doc.lines) {
        const std::string& kw = line.tokens[0];
        if (kw == "patient") {
            detail::require_tokens(doc, line, 2, 3, "patient <patient_id> [split]");
            PatientRecord p;
            p.patient_id = line.tokens[1];
            if (line.tokens.size() == 3) p.split = line.tokens[2];
            manifest.patients.push_back(std::move(p));
        } else if (kw == "image") {
            detail::require_tokens(doc, line, 5, 6,
                                   "image <image_id> <width> <height> <PE|NonPE> [mask_ref]");
            if (manifest.patients.empty())
                throw ParseError(detail::at_line(doc, line) + ": image before any patient line");
            ImageRecord img;
            img.image_id = line.tokens[1];
            img.width = static_cast<int>(detail::parse_int(doc, line, 2, "width"));
            img.height = static_cast<int>(detail::parse_int(doc, line, 3, "height"));
            try {
                img.label = slice_label_from_string(line.tokens[4]);
            } catch (const ParseError& e) {
                throw ParseError(detail::at_line(doc, line) + ": " + e.what());
            }
            if (line.tokens.size() == 6) img.mask_ref = line.tokens[5];
            manifest.patients.back().images.push_back(std::move(img));
        } else if (kw == "annotation") {
            detail::require_tokens(doc, line, 7, 7,
                                   "annotation <image_id> <class_id> <x_min> <y_min> <x_max> <y_max>");
            PendingAnnotation a;
            a.line = &line;
            a.image_id = line.tokens[1];
            a.box.class_id = static_cast<int>(detail::parse_int(doc, line, 2, "class_id"));
            a.box.box = BBox{detail::parse_num(doc, line, 3, "x_min"),
                             detail::parse_num(doc, line, 4, "y_min"),
                             detail::parse_num(doc, line, 5, "x_max"),
                             detail::parse_num(doc, line, 6, "y_max")};
            pending.push_back(std::move(a));
        } else {
            throw ParseError(detail::at_line(doc, line) + ": unknown record '" + kw + "'");
        }
    }

    for (PendingAnnotation& a : pending) {
        ImageRecord* target = nullptr;
        for (PatientRecord& p : manifest.patients) {
            for (ImageRecord& img : p.images) {
                if (img.image_id == a.image_id) {
                    target = &img;
                    break;
                }
            }
            if (target) break;
        }
        if (!target)
            throw ParseError(detail::at_line(doc, *a.line) + ": annotation for unknown image '" +
                             a.image_id + "'");
        target->annotations.push_back(a.box);
    }
    return manifest;
}

inline void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-manifest 1\n";
    for (const PatientRecord& p : manifest.patients) {
        out << "patient " << p.patient_id;
        if (p.split) out << ' ' << *p.split;
        out << '\n';
        for (const ImageRecord& img : p.images) {
            out << "image " << img.image_id << ' ' << img.width << ' ' << img.height << ' '
                << to_string(img.label);
            if (img.mask_ref) out << ' ' << *img.mask_ref;
            out << '\n';
            for (const AnnotationBox& a : img.annotations) {
                out << "annotation " << img.image_id << ' ' << a.class_id << ' '
                    << format_fixed(a.box.x_min) << ' ' << format_fixed(a.box.y_min) << ' '
                    << format_fixed(a.box.x_max) << ' ' << format_fixed(a.box.y_max) << '\n';
            }
        }
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// HU image: text descriptor plus raw little-endian int16 payload
//
//   pedet-huimage 1
//   width <n>
//   height <n>
//   data <path relative to the descriptor>
//   dtype int16le        (optional; int16le is the only supported value)
// ---------------------------------------------------------------------------

inline HUImage read_hu_image(const std::string& descriptor_path) {
    const TextDoc doc = read_text_doc(descriptor_path, "huimage");
    int width = -1, height = -1;
    std::string data_ref;
    for (const TextLine& line : doc.lines) {
        const std::string& kw = line.tokens[0];
        if (kw == "width") {
            detail::require_tokens(doc, line, 2, 2, "width <n>");
            width = static_cast<int>(detail::parse_int(doc, line, 1, "width"));
        } else if (kw == "height") {
            detail::require_tokens(doc, line, 2, 2, "height <n>");
            height = static_cast<int>(detail::parse_int(doc, line, 1, "height"));
        } else if (kw == "data") {
            detail::require_tokens(doc, line, 2, 2, "data <path>");
            data_ref = line.tokens[1];
        } else if (kw == "dtype") {
            detail::require_tokens(doc, line, 2, 2, "dtype int16le");
            if (line.tokens[1] != "int16le")
                throw ParseError(detail::at_line(doc, line) + ": unsupported dtype '" +
                                 line.tokens[1] + "'");
        } else {
            throw ParseError(detail::at_line(doc, line) + ": unknown field '" + kw + "'");
        }
    }
    if (width <= 0 || height <= 0)
        throw ParseError(descriptor_path + ": width and height must be declared and positive");
    if (data_ref.empty()) throw ParseError(descriptor_path + ": missing data reference");

    const std::filesystem::path raw_path =
        std::filesystem::path(descriptor_path).parent_path() / data_ref;
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw DataError("cannot open raw HU data '" + raw_path.string() + "'");

    const std::size_t expected =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 2;
    std::vector<char> bytes(expected);
    raw.read(bytes.data(), static_cast<std::streamsize>(expected));
    const std::size_t got = static_cast<std::size_t>(raw.gcount());
    if (got < expected)
        throw ParseError("raw HU data '" + raw_path.string() + "': expected " +
                         std::to_string(expected) + " bytes, truncated at byte offset " +
                         std::to_string(got));
    char probe;
    if (raw.read(&probe, 1))
        throw ParseError("raw HU data '" + raw_path.string() + "': trailing bytes past offset " +
                         std::to_string(expected));

    HUImage img;
    img.width = width;
    img.height = height;
    img.data.resize(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const std::uint16_t lo = static_cast<std::uint8_t>(bytes[2 * i]);
        const std::uint16_t hi = static_cast<std::uint8_t>(bytes[2 * i + 1]);
        img.data[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return img;
}

inline void write_hu_image(const std::string& descriptor_path, const HUImage& img,
                           const std::string& data_ref) {
    {
        std::ofstream out = detail::open_out(descriptor_path);
        out << "pedet-huimage 1\n";
        out << "width " << img.width << '\n';
        out << "height " << img.height << '\n';
        out << "data " << data_ref << '\n';
        out << "dtype int16le\n";
        if (!out) throw DataError("write failed for '" + descriptor_path + "'");
    }
    const std::filesystem::path raw_path =
        std::filesystem::path(descriptor_path).parent_path() / data_ref;
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw DataError("cannot open '" + raw_path.string() + "' for writing");
    for (std::int16_t v : img.data) {
        const std::uint16_t u = static_cast<std::uint16_t>(v);
        const char bytes[2] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff)};
        raw.write(bytes, 2);
    }
    if (!raw) throw DataError("write failed for '" + raw_path.string() + "'");
}

// ---------------------------------------------------------------------------
// Heatmap: header plus width*height row-major values in [0,1]
// ---------------------------------------------------------------------------

inline Heatmap read_heatmap(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "heatmap");
    Heatmap h;
    std::size_t i = 0;

    if (doc.lines.size() < 2 || doc.lines[0].tokens[0] != "width" ||
        doc.lines[1].tokens[0] != "height")
        throw ParseError(path + ": heatmap must declare width then height after the header");
    detail::require_tokens(doc, doc.lines[0], 2, 2, "width <n>");
    detail::require_tokens(doc, doc.lines[1], 2, 2, "height <n>");
    h.width = static_cast<int>(detail::parse_int(doc, doc.lines[0], 1, "width"));
    h.height = static_cast<int>(detail::parse_int(doc, doc.lines[1], 1, "height"));
    if (h.width <= 0 || h.height <= 0)
        throw ParseError(path + ": heatmap dimensions must be positive");

    const std::size_t expected = static_cast<std::size_t>(h.width) * h.height;
    h.data.reserve(expected);
    for (i = 2; i < doc.lines.size(); ++i) {
        const TextLine& line = doc.lines[i];
        for (std::size_t t = 0; t < line.tokens.size(); ++t) {
            const double v = detail::parse_num(doc, line, t, "heatmap value");
            if (v < 0.0 || v > 1.0)
                throw ParseError(detail::at_line(doc, line) + ": heatmap value outside [0,1]");
            if (h.data.size() == expected)
                throw ParseError(detail::at_line(doc, line) + ": more than " +
                                 std::to_string(expected) + " heatmap values");
            h.data.push_back(v);
        }
    }
    if (h.data.size() != expected)
        throw ParseError(path + ": expected " + std::to_string(expected) + " heatmap values, got " +
                         std::to_string(h.data.size()));
    return h;
}

inline void write_heatmap(const std::string& path, const Heatmap& h) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-heatmap 1\n";
    out << "width " << h.width << '\n';
    out << "height " << h.height << '\n';
    for (int r = 0; r < h.height; ++r) {
        for (int c = 0; c < h.width; ++c) {
            if (c) out << ' ';
            out << format_fixed(h.at(r, c));
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Crop record
// ---------------------------------------------------------------------------

struct CropRecord {
    int image_width = 0;
    int image_height = 0;
    BBox box;
};

inline CropRecord read_crop(const std::string& path) {
    const TextDoc doc = read_text_doc(path, "crop");
    CropRecord rec;
    bool saw_box = false;
    for (const TextLine& line : doc.lines) {
        const std::string& kw = line.tokens[0];
        if (kw == "image_width") {
            detail::require_tokens(doc, line, 2, 2, "image_width <n>");
            rec.image_width = static_cast<int>(detail::parse_int(doc, line, 1, "image_width"));
        } else if (kw == "image_height") {
            detail::require_tokens(doc, line, 2, 2, "image_height <n>");
            rec.image_height = static_cast<int>(detail::parse_int(doc, line, 1, "image_height"));
        } else if (kw == "box") {
            detail::require_tokens(doc, line, 5, 5, "box <x_min> <y_min> <x_max> <y_max>");
            rec.box = BBox{detail::parse_num(doc, line, 1, "x_min"),
                           detail::parse_num(doc, line, 2, "y_min"),
                           detail::parse_num(doc, line, 3, "x_max"),
                           detail::parse_num(doc, line, 4, "y_max")};
            saw_box = true;
        } else {
            throw ParseError(detail::at_line(doc, line) + ": unknown field '" + kw + "'");
        }
    }
    if (!saw_box) throw ParseError(path + ": missing box record");
    return rec;
}

inline void write_crop(const std::string& path, const CropRecord& rec) {
    std::ofstream out = detail::open_out(path);
    out << "pedet-crop 1\n";
    out << "image_width " << rec.image_width << '\n';
    out << "image_height " << rec.image_height << '\n';
    out << "box " << format_fixed(rec.box.x_min) << ' ' << format_fixed(rec.box.y_min) << ' '
        << format_fixed(rec.box.x_max) << ' ' << format_fixed(rec.box.y_max) << '\n';
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255)
// ---------------------------------------------------------------------------

inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");

    // headers allow '#' comments anywhere between tokens
    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        return tok;
    };
    auto header_int = [&](const char* what) {
        const std::string tok = next_token();
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(tok, &pos);
            if (pos == tok.size() && v > 0) return v;
        } catch (const std::exception&) {
        }
        throw ParseError(path + ": bad PGM " + std::string(what) + " '" + tok + "'");
    };

    if (next_token() != "P5") throw ParseError(path + ": not a binary PGM (missing P5 magic)");
    GrayImage img;
    img.width = static_cast<int>(header_int("width"));
    img.height = static_cast<int>(header_int("height"));
    if (header_int("maxval") != 255) throw ParseError(path + ": only maxval 255 PGM is supported");

    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.data.resize(n);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw ParseError(path + ": PGM payload truncated at byte offset " +
                         std::to_string(in.gcount()));
    return img;
}

/// Masks travel as PGM with foreground 255.
inline void write_mask_pgm(const std::string& path, const BinaryMask& mask) {
    GrayImage img;
    img.width = mask.width;
    img.height = mask.height;
    img.data.resize(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i) img.data[i] = mask.data[i] ? 255 : 0;
    write_pgm(path, img);
}

inline BinaryMask read_mask_pgm(const std::string& path) {
    const GrayImage img = read_pgm(path);
    BinaryMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.data.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) mask.data[i] = img.data[i] ? 1 : 0;
    return mask;
}

} // namespace pedet
