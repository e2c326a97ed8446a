#include <catch2/catch_amalgamated.hpp>

#include "fieldsync/fsq1.hpp"
#include "fieldsync/pipeline.hpp"
#include "fieldsync/rng.hpp"
#include "support/docgen.hpp"
#include "support/oracles.hpp"

using namespace fieldsync;
using namespace fieldsync::imaging;

namespace {

Image random_gray(SplitMix64& rng, std::uint32_t w, std::uint32_t h) {
    Image img = make_image(w, h, 1);
    for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

}  // namespace

TEST_CASE("codec roundtrip equals quantize on random images") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        std::uint32_t w = 1 + static_cast<std::uint32_t>(rng.below(12));
        std::uint32_t h = 1 + static_cast<std::uint32_t>(rng.below(12));
        Image img = random_gray(rng, w, h);
        double q = 0.02 + rng.uniform() * 0.98;
        CompressedDoc doc = encode_fsq1(img, q);
        Image back = decode_fsq1(doc.bytes);
        REQUIRE(back == quantize(img, q));
    }
}

TEST_CASE("codec is lossless at quality 1") {
    SplitMix64 rng(102);
    Image img = random_gray(rng, 31, 17);
    CHECK(decode_fsq1(encode_fsq1(img, 1.0).bytes) == img);
}

TEST_CASE("payload bit count matches the reference prefix coder") {
    SplitMix64 rng(103);
    for (int trial = 0; trial < 40; ++trial) {
        std::uint32_t w = 2 + static_cast<std::uint32_t>(rng.below(20));
        std::uint32_t h = 2 + static_cast<std::uint32_t>(rng.below(20));
        Image img = random_gray(rng, w, h);
        // Skew toward few distinct values so runs and ties actually occur.
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(s % 5 * 60);
        double q = 0.1 + rng.uniform() * 0.9;
        auto bytes = fsq1::encode_bytes(img, q);
        // payload_bit_count sits after magic(4) version(1) dims(8) q(2) L(2)
        // and the 256-byte table.
        std::size_t off = 4 + 1 + 8 + 2 + 2 + 256;
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= std::uint64_t{bytes[off + static_cast<std::size_t>(i)]} << (8 * i);
        std::uint64_t want = oracles::ref_rle_huffman_bits(quantize(img, q).samples);
        REQUIRE(bits == want);
    }
}

TEST_CASE("all-zero image compresses to a sliver") {
    Image zeros = make_image(100, 100, 1, 0);
    CompressedDoc doc = encode_fsq1(zeros, 0.6);
    CHECK(doc.bytes.size() < 10'000);
    CHECK(decode_fsq1(doc.bytes) == zeros);
}

TEST_CASE("document container grows with quality") {
    Image doc = to_monochrome(docgen::synthetic_document(7, 400, 300));
    auto low = encode_fsq1(doc, 0.3);
    auto high = encode_fsq1(doc, 0.9);
    CHECK(low.bytes.size() <= high.bytes.size());
}

TEST_CASE("container starts with the magic and digest matches") {
    Image img = make_image(3, 3, 1, 9);
    CompressedDoc doc = encode_fsq1(img, 0.5);
    REQUIRE(doc.bytes.size() > 4);
    CHECK(doc.bytes[0] == 'F');
    CHECK(doc.bytes[1] == 'S');
    CHECK(doc.bytes[2] == 'Q');
    CHECK(doc.bytes[3] == '1');
    CHECK(doc.digest == sha256_hex(doc.bytes));
    CHECK(doc.original_pixels == 9);
}

TEST_CASE("decode rejects bad magic") {
    std::vector<std::uint8_t> junk = {'J', 'U', 'N', 'K', 1, 0};
    try {
        decode_fsq1(junk);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::BadMagic);
    }
}

TEST_CASE("decode rejects unknown version") {
    Image img = make_image(2, 2, 1, 50);
    auto bytes = encode_fsq1(img, 1.0).bytes;
    bytes[4] = 9;
    try {
        decode_fsq1(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::BadVersion);
    }
}

TEST_CASE("decode rejects truncated payload") {
    SplitMix64 rng(104);
    Image img = random_gray(rng, 24, 24);
    auto bytes = encode_fsq1(img, 0.8).bytes;
    bytes.resize(bytes.size() - 3);
    try {
        decode_fsq1(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::Overrun);
    }
}

TEST_CASE("decode rejects trailing garbage") {
    Image img = make_image(4, 4, 1, 77);
    auto bytes = encode_fsq1(img, 0.9).bytes;
    bytes.push_back(0xAB);
    try {
        decode_fsq1(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::Overrun);
    }
}

TEST_CASE("decode rejects an inconsistent Huffman table") {
    Image img = make_image(8, 8, 1);
    for (std::size_t i = 0; i < img.samples.size(); ++i)
        img.samples[i] = static_cast<std::uint8_t>(i * 4);
    auto bytes = encode_fsq1(img, 1.0).bytes;
    std::size_t table_off = 4 + 1 + 8 + 2 + 2;
    // Make the Kraft sum incomplete by deleting one symbol's length.
    std::size_t victim = 0;
    for (std::size_t i = 0; i < 256; ++i) {
        if (bytes[table_off + i] > 1) {
            victim = table_off + i;
            break;
        }
    }
    REQUIRE(victim != 0);
    bytes[victim] = 0;
    try {
        decode_fsq1(bytes);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::BadTable);
    }
}

TEST_CASE("single-symbol stream roundtrips") {
    // One pixel, value 1: the RLE stream is the single byte repeated, so
    // the Huffman alphabet degenerates to one symbol.
    Image img = make_image(1, 1, 1, 1);
    auto doc = encode_fsq1(img, 1.0);
    CHECK(decode_fsq1(doc.bytes) == img);
}

TEST_CASE("psnr of the decoded corpus never drops as quality rises") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Image doc = to_monochrome(docgen::synthetic_document(seed, 320, 240));
        double prev_psnr = -1.0;
        std::size_t prev_size = 0;
        for (int i = 1; i <= 10; ++i) {
            double q = i / 10.0;
            auto enc = encode_fsq1(doc, q);
            double p = psnr(decode_fsq1(enc.bytes), doc);
            if (std::isinf(p)) p = 1e9;
            REQUIRE(p >= prev_psnr);
            REQUIRE(enc.bytes.size() >= prev_size);
            prev_psnr = p;
            prev_size = enc.bytes.size();
        }
    }
}

TEST_CASE("process_document composes the stages") {
    PipelineConfig cfg;
    SECTION("defaults shrink a synthetic document below monochrome size") {
        Image doc = docgen::synthetic_document(42, 800, 600);
        StageReport report;
        CompressedDoc out = process_document(doc, cfg, &report);
        CHECK(report.input_bytes == 800 * 600 * 3);
        CHECK(report.monochrome_bytes == 800 * 600);
        CHECK(out.bytes.size() < report.input_bytes / 3);
        CHECK(report.compressed_bytes == out.bytes.size());
    }
    SECTION("constant input decodes to a constant image") {
        Image flat = make_image(32, 32, 3, 120);
        CompressedDoc out = process_document(flat, cfg);
        Image back = decode_fsq1(out.bytes);
        Image expect = quantize(to_monochrome(flat), cfg.quality);
        CHECK(back == expect);
        for (auto s : back.samples) REQUIRE(s == back.samples[0]);
    }
    SECTION("lossless settings reproduce the monochrome input") {
        SplitMix64 rng(105);
        Image img = make_image(20, 20, 3);
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
        PipelineConfig lossless{1.0, 1.0, 0.0};
        CompressedDoc out = process_document(img, lossless);
        CHECK(decode_fsq1(out.bytes) == to_monochrome(img));
    }
    SECTION("bad config is rejected") {
        PipelineConfig bad;
        bad.quality = 1.5;
        CHECK_THROWS_AS(process_document(make_image(4, 4, 1), bad),
                        ValidationError);
    }
}

TEST_CASE("pipeline is deterministic") {
    Image doc = docgen::synthetic_document(9, 200, 150);
    PipelineConfig cfg;
    auto a = process_document(doc, cfg);
    auto b = process_document(doc, cfg);
    CHECK(a.bytes == b.bytes);
    CHECK(a.digest == b.digest);
}
