#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "pedet/fusion.hpp"

using namespace pedet;

namespace {

Detection det(double x0, double y0, double x1, double y1, double score,
              const std::string& model = "m", const std::string& image = "img", int cls = 0) {
    Detection d;
    d.image_id = image;
    d.model_id = model;
    d.class_id = cls;
    d.box = BBox{x0, y0, x1, y1};
    d.score = score;
    return d;
}

} // namespace

TEST_CASE("model weights", "[fusion]") {
    ModelWeights w;
    w.weights = {{"yolov8l", 3.0}, {"yolov8m", 2.5}, {"frcnn", 1.0}};
    w.validate();
    CHECK(w.max_weight() == 3.0);
    CHECK(w.weight_for("frcnn") == 1.0);
    CHECK_THROWS_AS(w.weight_for("unknown"), ConfigError);

    w.default_weight = 0.5;
    CHECK(w.weight_for("unknown") == 0.5);

    ModelWeights bad;
    bad.weights = {{"m", -1.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK(ModelWeights::uniform().max_weight() == 1.0);
}

TEST_CASE("score weighting scales against the top model", "[fusion]") {
    ModelWeights w;
    w.weights = {{"a", 3.0}, {"b", 2.5}, {"c", 1.0}};
    const std::vector<Detection> in{det(0, 0, 1, 1, 0.9, "a"), det(0, 0, 1, 1, 0.9, "b"),
                                    det(0, 0, 1, 1, 0.9, "c")};
    const std::vector<Detection> out = apply_model_weights(in, w);
    REQUIRE(out.size() == 3);
    CHECK(out[0].score == Catch::Approx(0.9).margin(1e-15));
    CHECK(out[1].score == Catch::Approx(0.9 * 2.5 / 3.0).margin(1e-15));
    CHECK(out[2].score == Catch::Approx(0.9 / 3.0).margin(1e-15));
    for (const Detection& d : out) {
        CHECK(d.score >= 0.0);
        CHECK(d.score <= 1.0);
    }
}

TEST_CASE("nms keeps the best box and drops its overlaps", "[fusion]") {
    // b overlaps a heavily, c is far away
    const std::vector<Detection> in{det(0, 0, 10, 10, 0.9), det(1, 1, 11, 11, 0.8),
                                    det(50, 50, 60, 60, 0.7)};
    const std::vector<Detection> out = nms(in, 0.5);
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.9);
    CHECK(out[1].score == 0.7);
}

TEST_CASE("nms suppression is not transitive through removed boxes", "[fusion]") {
    // b would suppress c, but a removes b first and a does not reach c
    const std::vector<Detection> in{det(0, 0, 10, 10, 0.9), det(4, 0, 14, 10, 0.8),
                                    det(8, 0, 18, 10, 0.7)};
    // iou(a,b) = 60/140 > 0.3, iou(a,c) = 20/180 < 0.3
    const std::vector<Detection> out = nms(in, 0.3);
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.9);
    CHECK(out[1].score == 0.7);
}

TEST_CASE("nms random-instance properties", "[fusion]") {
    std::mt19937 gen(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Detection> in;
        const int n = oracles::uniform_int(gen, 1, 12);
        for (int i = 0; i < n; ++i) in.push_back(oracles::random_detection(gen, "img", "m", 0, 40.0));
        const double t = oracles::uniform(gen, 0.1, 0.9);

        const std::vector<Detection> once = nms(in, t);
        for (std::size_t i = 0; i < once.size(); ++i)
            for (std::size_t j = i + 1; j < once.size(); ++j)
                CHECK(iou(once[i].box, once[j].box) <= t);

        CHECK(nms(once, t) == once);

        std::vector<Detection> shuffled = in;
        for (std::size_t i = shuffled.size(); i-- > 1;)
            std::swap(shuffled[i], shuffled[gen() % (i + 1)]);
        CHECK(nms(shuffled, t) == once);
    }
}

TEST_CASE("nmw hand example", "[fusion]") {
    const Detection seed = det(0, 0, 10, 10, 0.8);
    const Detection member = det(2, 2, 12, 12, 0.4);
    // overlap 8x8 = 64, union 200 - 64 = 136
    const double ov = 64.0 / 136.0;
    REQUIRE(iou(seed.box, member.box) == Catch::Approx(ov).margin(1e-15));

    const std::vector<Detection> out = nmw({seed, member}, 0.3);
    REQUIRE(out.size() == 1);

    const double wm = ov * 0.4;
    const double wsum = 0.8 + wm;
    CHECK(out[0].box.x_min == Catch::Approx((0.8 * 0 + wm * 2) / wsum).margin(1e-12));
    CHECK(out[0].box.x_max == Catch::Approx((0.8 * 10 + wm * 12) / wsum).margin(1e-12));
    CHECK(out[0].score == 0.8); // seed keeps its score
    CHECK(out[0].model_id == "m");
}

TEST_CASE("nmw keeps disjoint boxes apart", "[fusion]") {
    const std::vector<Detection> out =
        nmw({det(0, 0, 10, 10, 0.8), det(30, 30, 40, 40, 0.6)}, 0.3);
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.8);
    CHECK(out[1].score == 0.6);
}

TEST_CASE("wbf two-box closed form", "[fusion]") {
    const Detection a = det(0, 0, 10, 10, 0.8);
    const Detection b = det(2, 2, 12, 12, 0.4);
    const std::vector<Detection> out = wbf({a, b}, 0.3);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box.x_min == Catch::Approx((0.8 * 0 + 0.4 * 2) / 1.2).margin(1e-12));
    CHECK(out[0].box.y_max == Catch::Approx((0.8 * 10 + 0.4 * 12) / 1.2).margin(1e-12));
    CHECK(out[0].score == Catch::Approx(0.6).margin(1e-12)); // mean of member scores
}

TEST_CASE("wbf equal scores average coordinates", "[fusion]") {
    const std::vector<Detection> out =
        wbf({det(0, 0, 10, 10, 0.5), det(2, 0, 12, 10, 0.5), det(4, 0, 14, 10, 0.5)}, 0.2);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box.x_min == Catch::Approx(2.0).margin(1e-12));
    CHECK(out[0].box.x_max == Catch::Approx(12.0).margin(1e-12));
    CHECK(out[0].score == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("wbf fused box stays inside the member envelope", "[fusion]") {
    std::mt19937 gen(31);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Detection> in;
        const int n = oracles::uniform_int(gen, 1, 8);
        for (int i = 0; i < n; ++i) {
            Detection d = oracles::random_detection(gen, "img", "m", 0, 30.0);
            if (d.score == 0.0) d.score = 0.05;
            in.push_back(d);
        }
        for (const Detection& f : wbf(in, 0.4)) {
            double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
            for (const Detection& m : in) {
                lo_x = std::min(lo_x, m.box.x_min);
                hi_x = std::max(hi_x, m.box.x_max);
                lo_y = std::min(lo_y, m.box.y_min);
                hi_y = std::max(hi_y, m.box.y_max);
            }
            CHECK(f.box.x_min >= lo_x - 1e-9);
            CHECK(f.box.x_max <= hi_x + 1e-9);
            CHECK(f.box.y_min >= lo_y - 1e-9);
            CHECK(f.box.y_max <= hi_y + 1e-9);
            CHECK(f.box.valid());
        }
    }
}

TEST_CASE("ensemble pools models, applies the floor, groups by image and class", "[fusion]") {
    FusionConfig cfg;
    cfg.method = FusionMethod::WBF;
    cfg.iou_threshold = 0.3;
    cfg.score_floor = 0.1;

    ModelWeights w;
    w.weights = {{"a", 2.0}, {"b", 1.0}};

    std::map<std::string, std::vector<Detection>> per_model;
    per_model["a"] = {det(0, 0, 10, 10, 0.8, "a"),
                      det(0, 0, 10, 10, 0.15, "a", "img", 1)}; // other class, fused separately
    per_model["b"] = {det(2, 2, 12, 12, 0.8, "b"),            // weighted to 0.4, joins the cluster
                      det(40, 40, 50, 50, 0.12, "b")};        // weighted to 0.06, below floor

    const std::vector<Detection> out = ensemble(per_model, cfg, w);
    REQUIRE(out.size() == 2);

    // class 0: wbf of (0.8 weighted stays 0.8) and (0.8 * 1/2 = 0.4)
    CHECK(out[0].class_id == 0);
    CHECK(out[0].score == Catch::Approx(0.6).margin(1e-12));
    CHECK(out[0].box.x_min == Catch::Approx((0.8 * 0 + 0.4 * 2) / 1.2).margin(1e-12));

    // class 1 survives alone, never merged across classes
    CHECK(out[1].class_id == 1);
    CHECK(out[1].score == Catch::Approx(0.15).margin(1e-12));
}

TEST_CASE("ensemble separates images", "[fusion]") {
    FusionConfig cfg;
    std::map<std::string, std::vector<Detection>> per_model;
    per_model["m"] = {det(0, 0, 10, 10, 0.9, "m", "img_a"), det(0, 0, 10, 10, 0.8, "m", "img_b")};
    const std::vector<Detection> out = ensemble(per_model, cfg, ModelWeights::uniform());
    REQUIRE(out.size() == 2); // identical boxes on different images never merge
}

TEST_CASE("fusion config validation", "[fusion]") {
    FusionConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.iou_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.iou_threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.iou_threshold = 0.3;
    cfg.score_floor = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(fusion_method_from_string("soft-nms"), ConfigError);
}
