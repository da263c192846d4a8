#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "pedet/io.hpp"
#include "temp_dir.hpp"

using namespace pedet;

TEST_CASE("fixed formatting", "[io]") {
    CHECK(format_fixed(0.5) == "0.500000");
    CHECK(format_fixed(0.0) == "0.000000");
    CHECK(format_fixed(-1.25) == "-1.250000");
    CHECK(format_fixed(123.4567891) == "123.456789");
}

TEST_CASE("prediction files round-trip to a fixpoint", "[io]") {
    TempDir tmp;
    std::vector<Detection> dets;
    Detection d;
    d.image_id = "img_001";
    d.model_id = "yolov8l";
    d.class_id = 0;
    d.box = BBox{10.5, 20.25, 30.0, 44.125};
    d.score = 0.875;
    dets.push_back(d);
    d.model_id = "frcnn";
    d.score = 0.062;
    dets.push_back(d);

    const std::string p1 = tmp.file("preds.txt");
    const std::string p2 = tmp.file("preds2.txt");
    write_predictions(p1, dets);
    const std::vector<Detection> back = read_predictions(p1);
    REQUIRE(back.size() == 2);
    CHECK(back == dets);
    write_predictions(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("prediction parsing diagnostics carry file and line", "[io]") {
    TempDir tmp;
    const std::string path = tmp.file("bad.txt");

    SECTION("wrong header") {
        spill(path, "pedet-verdicts 1\n");
        CHECK_THROWS_AS(read_predictions(path), ParseError);
    }

    SECTION("unsupported version") {
        spill(path, "pedet-predictions 2\n");
        CHECK_THROWS_WITH(read_predictions(path), Catch::Matchers::ContainsSubstring("version"));
    }

    SECTION("token count") {
        spill(path, "pedet-predictions 1\nimg m 0 1 2 3 4\n");
        CHECK_THROWS_WITH(read_predictions(path), Catch::Matchers::ContainsSubstring(":2:"));
    }

    SECTION("bad number") {
        spill(path, "pedet-predictions 1\n# comment\nimg m 0 1 2 3 4 zero\n");
        CHECK_THROWS_WITH(read_predictions(path), Catch::Matchers::ContainsSubstring(":3:"));
    }

    SECTION("score outside range") {
        spill(path, "pedet-predictions 1\nimg m 0 1 2 3 4 1.5\n");
        CHECK_THROWS_WITH(read_predictions(path), Catch::Matchers::ContainsSubstring("score"));
    }

    SECTION("degenerate box") {
        spill(path, "pedet-predictions 1\nimg m 0 5 2 3 4 0.5\n");
        CHECK_THROWS_AS(read_predictions(path), ParseError);
    }

    SECTION("missing file") {
        CHECK_THROWS_AS(read_predictions(tmp.file("nope.txt")), DataError);
    }
}

TEST_CASE("comments and blank lines are ignored", "[io]") {
    TempDir tmp;
    const std::string path = tmp.file("annotated.txt");
    spill(path, "# leading comment\n\npedet-predictions 1\n\n# note\n  img m 0 1 2 3 4 0.25\n");
    const std::vector<Detection> dets = read_predictions(path);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].score == 0.25);
}

TEST_CASE("verdict files", "[io]") {
    TempDir tmp;
    const std::string path = tmp.file("verdicts.txt");
    write_verdicts(path, {{"img_a", 0.75}, {"img_b", 0.0}});
    const std::vector<ClassifierVerdict> back = read_verdicts(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_id == "img_a");
    CHECK(back[0].p == 0.75);

    spill(path, "pedet-verdicts 1\nimg 1.5\n");
    CHECK_THROWS_AS(read_verdicts(path), ParseError);
}

TEST_CASE("ground truth files", "[io]") {
    TempDir tmp;
    const std::string path = tmp.file("gt.txt");
    write_ground_truth(path, {{"img", 0, BBox{1, 2, 3, 4}}});
    const std::vector<GroundTruthBox> back = read_ground_truth(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].box == BBox{1, 2, 3, 4});

    spill(path, "pedet-groundtruth 1\nimg 0 5 5 1 6\n");
    CHECK_THROWS_AS(read_ground_truth(path), ParseError);
}

TEST_CASE("manifest round-trip with splits, masks and annotations", "[io]") {
    TempDir tmp;
    DatasetManifest m;
    PatientRecord p;
    p.patient_id = "P1";
    p.split = "train";
    ImageRecord img;
    img.image_id = "img_1";
    img.width = 512;
    img.height = 512;
    img.label = SliceLabel::PE;
    img.mask_ref = "masks/img_1.pgm";
    img.annotations.push_back({0, BBox{10, 20, 30, 40}});
    p.images.push_back(img);
    m.patients.push_back(p);
    PatientRecord q;
    q.patient_id = "P2";
    ImageRecord neg;
    neg.image_id = "img_2";
    neg.width = 512;
    neg.height = 512;
    neg.label = SliceLabel::NonPE;
    q.images.push_back(neg);
    m.patients.push_back(q);

    const std::string p1 = tmp.file("manifest.txt");
    const std::string p2 = tmp.file("manifest2.txt");
    write_manifest(p1, m);
    const DatasetManifest back = read_manifest(p1);
    REQUIRE(back.patients.size() == 2);
    CHECK(back.patients[0].split == std::optional<std::string>{"train"});
    CHECK_FALSE(back.patients[1].split.has_value());
    REQUIRE(back.patients[0].images.size() == 1);
    CHECK(back.patients[0].images[0].mask_ref == std::optional<std::string>{"masks/img_1.pgm"});
    REQUIRE(back.patients[0].images[0].annotations.size() == 1);
    CHECK(back.patients[0].images[0].annotations[0].box == BBox{10, 20, 30, 40});
    CHECK(back.patients[0].images[0].label == SliceLabel::PE);

    write_manifest(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("manifest parsing errors", "[io]") {
    TempDir tmp;
    const std::string path = tmp.file("m.txt");

    SECTION("image before patient") {
        spill(path, "pedet-manifest 1\nimage img_1 512 512 PE\n");
        CHECK_THROWS_AS(read_manifest(path), ParseError);
    }

    SECTION("unknown label") {
        spill(path, "pedet-manifest 1\npatient P1\nimage img_1 512 512 Positive\n");
        CHECK_THROWS_WITH(read_manifest(path), Catch::Matchers::ContainsSubstring("Positive"));
    }

    SECTION("annotation may come before its image") {
        spill(path, "pedet-manifest 1\npatient P1\n"
                    "annotation img_1 0 1.0 1.0 2.0 2.0\n"
                    "image img_1 512 512 PE\n");
        const DatasetManifest m = read_manifest(path);
        CHECK(m.patients[0].images[0].annotations.size() == 1);
    }

    SECTION("annotation for an unknown image") {
        spill(path, "pedet-manifest 1\npatient P1\nannotation ghost 0 1 1 2 2\n");
        CHECK_THROWS_WITH(read_manifest(path), Catch::Matchers::ContainsSubstring("ghost"));
    }

    SECTION("unknown record keyword") {
        spill(path, "pedet-manifest 1\nscan P1\n");
        CHECK_THROWS_AS(read_manifest(path), ParseError);
    }
}

TEST_CASE("hu image raw round-trip keeps negative values", "[io]") {
    TempDir tmp;
    HUImage img;
    img.width = 3;
    img.height = 2;
    img.data = {-1024, -1, 0, 1, 400, 3071};
    const std::string desc = tmp.file("scan.hu");
    write_hu_image(desc, img, "scan.raw");

    const HUImage back = read_hu_image(desc);
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.data == img.data);
}

TEST_CASE("hu image malformed inputs", "[io]") {
    TempDir tmp;
    HUImage img;
    img.width = 4;
    img.height = 4;
    img.data.assign(16, -500);
    const std::string desc = tmp.file("scan.hu");
    write_hu_image(desc, img, "scan.raw");

    SECTION("truncated raw names the byte offset") {
        spill(tmp.file("scan.raw"), std::string(10, '\0'));
        CHECK_THROWS_WITH(read_hu_image(desc), Catch::Matchers::ContainsSubstring("byte offset 10"));
    }

    SECTION("oversized raw is rejected") {
        spill(tmp.file("scan.raw"), std::string(40, '\0'));
        CHECK_THROWS_WITH(read_hu_image(desc), Catch::Matchers::ContainsSubstring("trailing"));
    }

    SECTION("missing dimensions") {
        spill(desc, "pedet-huimage 1\ndata scan.raw\n");
        CHECK_THROWS_AS(read_hu_image(desc), ParseError);
    }

    SECTION("unsupported dtype") {
        spill(desc, "pedet-huimage 1\nwidth 4\nheight 4\ndata scan.raw\ndtype float32\n");
        CHECK_THROWS_AS(read_hu_image(desc), ParseError);
    }
}

TEST_CASE("heatmap files", "[io]") {
    TempDir tmp;
    Heatmap h;
    h.width = 3;
    h.height = 2;
    h.data = {0.0, 0.25, 0.5, 0.75, 1.0, 0.125};
    const std::string p1 = tmp.file("heat.txt");
    const std::string p2 = tmp.file("heat2.txt");
    write_heatmap(p1, h);
    const Heatmap back = read_heatmap(p1);
    CHECK(back.data == h.data);
    write_heatmap(p2, back);
    CHECK(slurp(p1) == slurp(p2));

    SECTION("value out of range") {
        spill(p1, "pedet-heatmap 1\nwidth 2\nheight 1\n0.5 1.5\n");
        CHECK_THROWS_AS(read_heatmap(p1), ParseError);
    }

    SECTION("value count must match") {
        spill(p1, "pedet-heatmap 1\nwidth 2\nheight 2\n0.5 0.5 0.5\n");
        CHECK_THROWS_AS(read_heatmap(p1), ParseError);
        spill(p1, "pedet-heatmap 1\nwidth 2\nheight 1\n0.5 0.5 0.5\n");
        CHECK_THROWS_AS(read_heatmap(p1), ParseError);
    }
}

TEST_CASE("crop records", "[io]") {
    TempDir tmp;
    CropRecord rec;
    rec.image_width = 512;
    rec.image_height = 512;
    rec.box = BBox{32, 8, 56, 16};
    const std::string path = tmp.file("crop.txt");
    write_crop(path, rec);
    const CropRecord back = read_crop(path);
    CHECK(back.image_width == 512);
    CHECK(back.box == BBox{32, 8, 56, 16});

    spill(path, "pedet-crop 1\nimage_width 512\n");
    CHECK_THROWS_AS(read_crop(path), ParseError);
}

TEST_CASE("pgm round-trip and header quirks", "[io]") {
    TempDir tmp;
    GrayImage img;
    img.width = 4;
    img.height = 3;
    img.data = {0, 50, 100, 150, 200, 250, 255, 5, 10, 15, 20, 25};
    const std::string path = tmp.file("img.pgm");
    write_pgm(path, img);
    const GrayImage back = read_pgm(path);
    CHECK(back.width == 4);
    CHECK(back.height == 3);
    CHECK(back.data == img.data);

    SECTION("comments inside the header") {
        spill(path, "P5\n# a comment\n2 1\n# another\n255\n\x40\x41");
        const GrayImage g = read_pgm(path);
        CHECK(g.data == std::vector<std::uint8_t>{0x40, 0x41});
    }

    SECTION("only maxval 255") {
        spill(path, "P5\n2 1\n64\n\x40\x41");
        CHECK_THROWS_AS(read_pgm(path), ParseError);
    }

    SECTION("truncated payload") {
        spill(path, "P5\n4 4\n255\nxx");
        CHECK_THROWS_WITH(read_pgm(path), Catch::Matchers::ContainsSubstring("byte offset"));
    }

    SECTION("wrong magic") {
        spill(path, "P2\n2 1\n255\n1 2\n");
        CHECK_THROWS_AS(read_pgm(path), ParseError);
    }
}

TEST_CASE("mask pgm maps foreground to 255 and back", "[io]") {
    TempDir tmp;
    BinaryMask mask;
    mask.width = 2;
    mask.height = 2;
    mask.data = {1, 0, 0, 1};
    const std::string path = tmp.file("mask.pgm");
    write_mask_pgm(path, mask);

    const GrayImage raw = read_pgm(path);
    CHECK(raw.data == std::vector<std::uint8_t>{255, 0, 0, 255});

    const BinaryMask back = read_mask_pgm(path);
    CHECK(back.data == mask.data);
}
