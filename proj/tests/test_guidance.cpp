#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "pedet/guidance.hpp"

using namespace pedet;

namespace {

Detection det(const std::string& image, double score) {
    Detection d;
    d.image_id = image;
    d.model_id = "m";
    d.box = BBox{0, 0, 10, 10};
    d.score = score;
    return d;
}

} // namespace

TEST_CASE("trusted image keeps everything", "[guidance]") {
    const std::vector<Detection> in{det("img", 0.9), det("img", 0.001), det("img", 0.3)};
    const std::vector<Detection> out = guided_filter(in, {"img", 0.5}, GuidanceConfig{});
    CHECK(out == in); // theta is inclusive, order untouched
}

TEST_CASE("distrusted image keeps only scores strictly above the floor", "[guidance]") {
    const std::vector<Detection> in{det("img", 0.9), det("img", 0.018), det("img", 0.0181),
                                    det("img", 0.001)};
    const std::vector<Detection> out = guided_filter(in, {"img", 0.49}, GuidanceConfig{});
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.9);
    CHECK(out[1].score == 0.0181); // exactly 0.018 is dropped
}

TEST_CASE("verdict for the wrong image is rejected", "[guidance]") {
    CHECK_THROWS_AS(guided_filter({det("img_a", 0.5)}, {"img_b", 0.9}, GuidanceConfig{}),
                    DataError);
}

TEST_CASE("guidance config validation", "[guidance]") {
    CHECK_THROWS_AS((GuidanceConfig{-0.1, 0.018}.validate()), ConfigError);
    CHECK_THROWS_AS((GuidanceConfig{0.5, 1.5}.validate()), ConfigError);
}

TEST_CASE("dataset guidance demands verdict coverage", "[guidance]") {
    std::map<std::string, std::vector<Detection>> per_image;
    per_image["img_a"] = {det("img_a", 0.9)};
    per_image["img_b"] = {det("img_b", 0.9)};
    per_image["img_c"] = {}; // empty lists need no verdict

    SECTION("missing verdicts are listed") {
        try {
            guided_filter_dataset(per_image, {{"img_a", 0.6}}, GuidanceConfig{});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string what = e.what();
            CHECK(what.find("img_b") != std::string::npos);
            CHECK(what.find("img_a") == std::string::npos);
        }
    }

    SECTION("duplicate verdicts are rejected") {
        CHECK_THROWS_AS(guided_filter_dataset(per_image, {{"img_a", 0.6}, {"img_a", 0.7}},
                                              GuidanceConfig{}),
                        DataError);
    }

    SECTION("full coverage filters per image") {
        const auto out = guided_filter_dataset(
            per_image, {{"img_a", 0.6}, {"img_b", 0.1}, {"img_c", 0.1}}, GuidanceConfig{});
        CHECK(out.at("img_a").size() == 1);
        CHECK(out.at("img_b").size() == 1); // 0.9 > 0.018 survives the gate
        CHECK(out.at("img_c").empty());
    }
}

TEST_CASE("guidance random properties", "[guidance]") {
    std::mt19937 gen(43);
    GuidanceConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, std::vector<Detection>> per_image;
        std::vector<ClassifierVerdict> verdicts;
        const int images = oracles::uniform_int(gen, 1, 6);
        for (int i = 0; i < images; ++i) {
            const std::string id = "img" + std::to_string(i);
            const int n = oracles::uniform_int(gen, 0, 5);
            for (int k = 0; k < n; ++k) {
                Detection d = oracles::random_detection(gen, id, "m", 0);
                d.score = oracles::uniform(gen, 0.0, 1.0);
                per_image[id].push_back(d);
            }
            verdicts.push_back({id, oracles::uniform(gen, 0.0, 1.0)});
        }

        const auto out = guided_filter_dataset(per_image, verdicts, cfg);
        for (const auto& [id, dets] : per_image) {
            const std::vector<Detection>& kept = out.at(id);
            // output is a subsequence of the input
            std::size_t cursor = 0;
            for (const Detection& k : kept) {
                while (cursor < dets.size() && !(dets[cursor] == k)) cursor++;
                REQUIRE(cursor < dets.size());
                cursor++;
            }
            // anything above the confidence floor survives whatever the verdict said
            std::size_t above_floor = 0, kept_above = 0;
            for (const Detection& d : dets)
                if (d.score > cfg.conf_floor) above_floor++;
            for (const Detection& k : kept)
                if (k.score > cfg.conf_floor) kept_above++;
            CHECK(kept_above == above_floor);
        }
    }
}
