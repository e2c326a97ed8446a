#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fieldsync/image.hpp"
#include "fieldsync/rng.hpp"
#include "support/oracles.hpp"

using namespace fieldsync;
using namespace fieldsync::imaging;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

Image random_gray(SplitMix64& rng, std::uint32_t w, std::uint32_t h) {
    Image img = make_image(w, h, 1);
    for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Vertical step: columns [0, split) = lo, the rest = hi.
Image vstep(std::uint32_t w, std::uint32_t h, std::uint32_t split,
            std::uint8_t lo, std::uint8_t hi) {
    Image img = make_image(w, h, 1);
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x)
            img.at(x, y) = x < split ? lo : hi;
    return img;
}

}  // namespace

TEST_CASE("load_pnm parses P5") {
    auto data = bytes_of("P5 2 1 255 ");
    data.push_back(0);
    data.push_back(255);
    Image img = load_pnm(data);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.samples == std::vector<std::uint8_t>{0, 255});
}

TEST_CASE("load_pnm parses P6") {
    auto data = bytes_of("P6\n1 1\n255\n");
    data.insert(data.end(), {255, 0, 0});
    Image img = load_pnm(data);
    CHECK(img.width == 1);
    CHECK(img.channels == 3);
    CHECK(img.samples == std::vector<std::uint8_t>{255, 0, 0});
}

TEST_CASE("load_pnm rejects truncated payload") {
    auto data = bytes_of("P5\n4 4\n255\n");
    data.insert(data.end(), 15, 7);  // header declares 16
    CHECK_THROWS_MATCHES(load_pnm(data), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("truncated")));
}

TEST_CASE("load_pnm rejects bad headers") {
    CHECK_THROWS_AS(load_pnm(bytes_of("P4 1 1 255 x")), ParseError);
    CHECK_THROWS_AS(load_pnm(bytes_of("")), ParseError);
    auto maxval = bytes_of("P5 1 1 128 ");
    maxval.push_back(9);
    CHECK_THROWS_MATCHES(load_pnm(maxval), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("maxval")));
    // Error message names the byte offset.
    try {
        load_pnm(bytes_of("P5 Z"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
        CHECK(e.offset() == 3);
    }
}

TEST_CASE("save_pnm layout and roundtrip") {
    Image one = make_image(1, 1, 1, 7);
    auto expect = bytes_of("P5\n1 1\n255\n");
    expect.push_back(7);
    CHECK(save_pnm(one) == expect);

    Image rgb = make_image(2, 2, 3);
    for (std::size_t i = 0; i < rgb.samples.size(); ++i)
        rgb.samples[i] = static_cast<std::uint8_t>(17 * i);
    auto data = save_pnm(rgb);
    // 12-byte payload after the header.
    CHECK(data.size() == std::string("P6\n2 2\n255\n").size() + 12);
    CHECK(load_pnm(data) == rgb);

    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::uint32_t w = 1 + static_cast<std::uint32_t>(rng.below(9));
        std::uint32_t h = 1 + static_cast<std::uint32_t>(rng.below(9));
        std::uint32_t c = rng.below(2) ? 3 : 1;
        Image img = make_image(w, h, c);
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
        CHECK(load_pnm(save_pnm(img)) == img);
    }
}

TEST_CASE("to_monochrome uses BT.601 weights") {
    Image px = make_image(1, 1, 3);

    px.samples = {255, 255, 255};
    CHECK(to_monochrome(px).samples[0] == 255);

    px.samples = {0, 0, 0};
    CHECK(to_monochrome(px).samples[0] == 0);

    px.samples = {255, 0, 0};  // round(0.299 * 255) = 76
    CHECK(to_monochrome(px).samples[0] == 76);
}

TEST_CASE("to_monochrome shrinks 3x and is idempotent") {
    SplitMix64 rng(21);
    Image rgb = make_image(16, 9, 3);
    for (auto& s : rgb.samples) s = static_cast<std::uint8_t>(rng.below(256));
    Image mono = to_monochrome(rgb);
    CHECK(mono.channels == 1);
    CHECK(mono.samples.size() * 3 == rgb.samples.size());
    CHECK(to_monochrome(mono) == mono);
}

TEST_CASE("detect_boundary on a constant image is empty") {
    Image flat = make_image(5, 5, 1, 128);
    EdgeMask mask = detect_boundary(flat, 1.0);
    CHECK(mask.true_count() == 0);
}

TEST_CASE("detect_boundary flags the step columns") {
    // 5x5, columns 0-1 = 0, columns 2-4 = 255, k = 1.
    // Replicated-border Sobel gives g = 1020 in columns 1 and 2, 0
    // elsewhere; mu = 408, sigma = 499.696, threshold = 907.696.
    Image step = vstep(5, 5, 2, 0, 255);
    EdgeMask mask = detect_boundary(step, 1.0);
    for (std::uint32_t y = 0; y < 5; ++y) {
        CHECK_FALSE(mask.at(0, y));
        CHECK(mask.at(1, y));
        CHECK(mask.at(2, y));
        CHECK_FALSE(mask.at(3, y));
        CHECK_FALSE(mask.at(4, y));
    }
}

TEST_CASE("detect_boundary with huge k is empty") {
    SplitMix64 rng(33);
    Image img = random_gray(rng, 24, 18);
    CHECK(detect_boundary(img, 1000.0).true_count() == 0);
}

TEST_CASE("detect_boundary rejects RGB input") {
    Image rgb = make_image(4, 4, 3);
    CHECK_THROWS_AS(detect_boundary(rgb, 1.0), ValidationError);
}

TEST_CASE("detect_boundary below 3x3 yields all-false") {
    Image tiny = vstep(2, 2, 1, 0, 255);
    CHECK(detect_boundary(tiny, 0.0).true_count() == 0);
}

TEST_CASE("detect_boundary matches the naive oracle on small images") {
    SplitMix64 rng(44);
    for (int trial = 0; trial < 200; ++trial) {
        std::uint32_t w = 3 + static_cast<std::uint32_t>(rng.below(6));
        std::uint32_t h = 3 + static_cast<std::uint32_t>(rng.below(6));
        Image img = random_gray(rng, w, h);
        double k = rng.uniform() * 2.0;
        EdgeMask got = detect_boundary(img, k);
        std::vector<bool> want = oracles::naive_sobel_mask(img, k);
        REQUIRE(got.bits.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            REQUIRE(got.bits[i] == want[i]);
    }
}

TEST_CASE("sharpen_boundary identities") {
    SplitMix64 rng(55);
    Image img = random_gray(rng, 9, 7);
    EdgeMask mask = detect_boundary(img, 0.5);

    SECTION("alpha 0 is the identity") {
        CHECK(sharpen_boundary(img, mask, 0.0) == img);
    }
    SECTION("all-false mask is the identity") {
        EdgeMask empty;
        empty.width = img.width;
        empty.height = img.height;
        empty.bits.assign(img.pixel_count(), false);
        CHECK(sharpen_boundary(img, empty, 1.5) == img);
    }
    SECTION("constant image is a fixed point") {
        Image flat = make_image(9, 7, 1, 200);
        EdgeMask full;
        full.width = 9;
        full.height = 7;
        full.bits.assign(63, true);
        CHECK(sharpen_boundary(flat, full, 1.0) == flat);
    }
}

TEST_CASE("sharpen_boundary overshoots across a step") {
    // Interior-level step 50|200 so the overshoot has headroom. Hand
    // convolution at row 2: blur(col1) = 87.5 -> out 12 or 13 by rounding
    // (half away from zero pins 13); blur(col2) = 162.5 -> out 238.
    Image step = vstep(5, 5, 2, 50, 200);
    EdgeMask full;
    full.width = 5;
    full.height = 5;
    full.bits.assign(25, true);
    Image sharp = sharpen_boundary(step, full, 1.0);
    CHECK(sharp.at(1, 2) == 13);
    CHECK(sharp.at(2, 2) == 238);
    CHECK(sharp.at(1, 2) < step.at(1, 2));
    CHECK(sharp.at(2, 2) > step.at(2, 2));
}

TEST_CASE("sharpen_boundary rejects mismatched mask") {
    Image img = make_image(4, 4, 1);
    EdgeMask mask;
    mask.width = 3;
    mask.height = 4;
    mask.bits.assign(12, false);
    CHECK_THROWS_AS(sharpen_boundary(img, mask, 1.0), ValidationError);
}

TEST_CASE("quantize level mapping") {
    CHECK(quantize_levels(0.6) == 154);
    CHECK(quantize_levels(1.0) == 256);
    CHECK(quantize_levels(0.001) == 2);
    CHECK_THROWS_AS(quantize_levels(0.0), ValidationError);
    CHECK_THROWS_AS(quantize_levels(1.5), ValidationError);
    CHECK_THROWS_AS(quantize_levels(-0.2), ValidationError);
}

TEST_CASE("quantize at quality 1 is the identity") {
    SplitMix64 rng(66);
    Image img = random_gray(rng, 13, 8);
    CHECK(quantize(img, 1.0) == img);
}

TEST_CASE("quantize endpoints are fixed points") {
    for (double q : {0.05, 0.3, 0.6, 0.99}) {
        Image img = make_image(2, 1, 1);
        img.samples = {0, 255};
        Image out = quantize(img, q);
        CHECK(out.samples[0] == 0);
        CHECK(out.samples[1] == 255);
    }
}

TEST_CASE("quantize error bound holds") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        double q = 0.02 + rng.uniform() * 0.98;
        int levels = quantize_levels(q);
        double bound = std::ceil(255.0 / (2.0 * (levels - 1))) + 1;
        Image img = random_gray(rng, 16, 16);
        Image out = quantize(img, q);
        for (std::size_t i = 0; i < img.samples.size(); ++i) {
            double err = std::abs(static_cast<double>(out.samples[i]) -
                                  static_cast<double>(img.samples[i]));
            REQUIRE(err <= bound);
        }
    }
}

TEST_CASE("psnr reference points") {
    Image a = make_image(3, 3, 1, 42);
    CHECK(std::isinf(psnr(a, a)));

    Image black = make_image(2, 2, 1, 0);
    Image white = make_image(2, 2, 1, 255);
    CHECK(psnr(black, white) == Catch::Approx(0.0).margin(1e-12));

    Image p = make_image(1, 1, 1, 100);
    Image r = make_image(1, 1, 1, 110);
    CHECK(psnr(p, r) == Catch::Approx(28.1308).margin(1e-3));

    Image wide = make_image(2, 1, 1);
    CHECK_THROWS_AS(psnr(a, wide), ValidationError);
}
