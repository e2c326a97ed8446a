#pragma once

// FSQ1 lossy grayscale container: uniform quantization, run-length
// encoding of the sample stream, then a canonical Huffman code over the
// RLE bytes.
//
// Layout (all multi-byte integers little-endian):
//   magic   "FSQ1"                        4 bytes
//   version u8 = 1
//   width   u32
//   height  u32
//   quality_milli u16   round(quality * 1000)
//   levels  u16         quantizer level count
//   code lengths        256 x u8, 0 = symbol absent
//   payload_bit_count u64
//   payload             Huffman bits, MSB-first per byte, zero-padded
//
// RLE tokens: value u8 followed by the run length as an unsigned LEB128
// varint. Runs span rows (single linear scan). Decoding reproduces the
// quantized image exactly: decode(encode(img, q)) == quantize(img, q).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "fieldsync/errors.hpp"
#include "fieldsync/image.hpp"
#include "fieldsync/sha256.hpp"

namespace fieldsync::imaging {

struct CompressedDoc {
    std::vector<std::uint8_t> bytes;
    std::string digest;  // SHA-256 hex of bytes
    std::uint64_t original_pixels = 0;
    double quality = 0;
};

namespace fsq1 {

inline constexpr char kMagic[4] = {'F', 'S', 'Q', '1'};
inline constexpr std::uint8_t kVersion = 1;

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct ByteReader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    std::uint8_t u8() {
        if (pos + 1 > buf.size())
            throw CodecError(CodecError::Code::Overrun, "container truncated");
        return buf[pos++];
    }
    std::uint16_t u16() {
        std::uint16_t a = u8(), b = u8();
        return static_cast<std::uint16_t>(a | (b << 8));
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
        return v;
    }
};

inline void append_leb128(std::vector<std::uint8_t>& out, std::uint64_t v) {
    do {
        std::uint8_t b = v & 0x7F;
        v >>= 7;
        if (v) b |= 0x80;
        out.push_back(b);
    } while (v);
}

// RLE over the full sample stream, runs spanning rows.
inline std::vector<std::uint8_t> rle_encode(const std::vector<std::uint8_t>& samples) {
    std::vector<std::uint8_t> out;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::uint8_t value = samples[i];
        std::size_t run = 1;
        while (i + run < samples.size() && samples[i + run] == value) ++run;
        out.push_back(value);
        append_leb128(out, run);
        i += run;
    }
    return out;
}

// Huffman code lengths from byte frequencies. Merge order is pinned:
// node weight first, then creation order (leaves in symbol order, then
// internal nodes in the order they were made), so identical inputs give
// identical tables everywhere.
inline std::array<std::uint8_t, 256> huffman_lengths(
    const std::vector<std::uint8_t>& stream) {
    std::array<std::uint64_t, 256> freq{};
    for (std::uint8_t b : stream) ++freq[b];

    struct Node {
        std::uint64_t weight;
        std::uint32_t order;
        int left = -1, right = -1;  // -1 marks a leaf
        int symbol = -1;
    };
    std::vector<Node> nodes;
    for (int s = 0; s < 256; ++s)
        if (freq[static_cast<std::size_t>(s)] > 0)
            nodes.push_back({freq[static_cast<std::size_t>(s)],
                             static_cast<std::uint32_t>(nodes.size()), -1, -1, s});

    std::array<std::uint8_t, 256> lengths{};
    if (nodes.empty()) return lengths;
    if (nodes.size() == 1) {
        lengths[static_cast<std::size_t>(nodes[0].symbol)] = 1;
        return lengths;
    }

    auto cmp = [&nodes](int a, int b) {
        if (nodes[static_cast<std::size_t>(a)].weight != nodes[static_cast<std::size_t>(b)].weight)
            return nodes[static_cast<std::size_t>(a)].weight > nodes[static_cast<std::size_t>(b)].weight;
        return nodes[static_cast<std::size_t>(a)].order > nodes[static_cast<std::size_t>(b)].order;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
    for (std::size_t i = 0; i < nodes.size(); ++i) heap.push(static_cast<int>(i));
    while (heap.size() > 1) {
        int a = heap.top();
        heap.pop();
        int b = heap.top();
        heap.pop();
        Node parent{nodes[static_cast<std::size_t>(a)].weight + nodes[static_cast<std::size_t>(b)].weight,
                    static_cast<std::uint32_t>(nodes.size()), a, b, -1};
        nodes.push_back(parent);
        heap.push(static_cast<int>(nodes.size() - 1));
    }

    // Depth-first depth assignment, iterative to survive degenerate trees.
    std::vector<std::pair<int, int>> stack{{heap.top(), 0}};
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const Node& n = nodes[static_cast<std::size_t>(idx)];
        if (n.symbol >= 0) {
            lengths[static_cast<std::size_t>(n.symbol)] = static_cast<std::uint8_t>(depth);
        } else {
            stack.push_back({n.left, depth + 1});
            stack.push_back({n.right, depth + 1});
        }
    }
    return lengths;
}

// Canonical code assignment: symbols ordered by (length, symbol value).
inline std::array<std::uint64_t, 256> canonical_codes(
    const std::array<std::uint8_t, 256>& lengths) {
    std::vector<int> symbols;
    for (int s = 0; s < 256; ++s)
        if (lengths[static_cast<std::size_t>(s)] > 0) symbols.push_back(s);
    std::sort(symbols.begin(), symbols.end(), [&](int a, int b) {
        if (lengths[static_cast<std::size_t>(a)] != lengths[static_cast<std::size_t>(b)])
            return lengths[static_cast<std::size_t>(a)] < lengths[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::array<std::uint64_t, 256> codes{};
    std::uint64_t code = 0;
    int prev_len = 0;
    for (int s : symbols) {
        int len = lengths[static_cast<std::size_t>(s)];
        code <<= (len - prev_len);
        codes[static_cast<std::size_t>(s)] = code;
        ++code;
        prev_len = len;
    }
    return codes;
}

class BitWriter {
public:
    void put(std::uint64_t code, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            if (bit_ == 0) bytes_.push_back(0);
            if ((code >> i) & 1)
                bytes_.back() |= static_cast<std::uint8_t>(0x80 >> bit_);
            bit_ = (bit_ + 1) % 8;
            ++count_;
        }
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::uint64_t bit_count() const { return count_; }

private:
    std::vector<std::uint8_t> bytes_;
    int bit_ = 0;
    std::uint64_t count_ = 0;
};

class BitReader {
public:
    BitReader(const std::uint8_t* data, std::uint64_t bit_count)
        : data_(data), bit_count_(bit_count) {}

    int next() {
        if (pos_ >= bit_count_) return -1;
        std::uint8_t byte = data_[pos_ >> 3];
        int bit = (byte >> (7 - (pos_ & 7))) & 1;
        ++pos_;
        return bit;
    }

    std::uint64_t consumed() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::uint64_t bit_count_;
    std::uint64_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_bytes(const Image& img, double quality) {
    if (img.channels != 1)
        throw ValidationError("FSQ1 encodes 1-channel images only");
    Image q = quantize(img, quality);
    std::vector<std::uint8_t> rle = detail::rle_encode(q.samples);
    auto lengths = detail::huffman_lengths(rle);
    auto codes = detail::canonical_codes(lengths);

    detail::BitWriter bits;
    for (std::uint8_t b : rle)
        bits.put(codes[b], lengths[b]);

    std::vector<std::uint8_t> out;
    out.reserve(24 + 256 + bits.bytes().size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    detail::put_u32(out, img.width);
    detail::put_u32(out, img.height);
    detail::put_u16(out, static_cast<std::uint16_t>(std::lround(quality * 1000.0)));
    detail::put_u16(out, static_cast<std::uint16_t>(quantize_levels(quality)));
    out.insert(out.end(), lengths.begin(), lengths.end());
    detail::put_u64(out, bits.bit_count());
    out.insert(out.end(), bits.bytes().begin(), bits.bytes().end());
    return out;
}

inline Image decode(const std::vector<std::uint8_t>& octets) {
    detail::ByteReader in{octets};
    if (octets.size() < 4 || !std::equal(kMagic, kMagic + 4, octets.begin()))
        throw CodecError(CodecError::Code::BadMagic,
                         "not an FSQ1 container: bad magic");
    in.pos = 4;
    std::uint8_t version = in.u8();
    if (version != kVersion)
        throw CodecError(CodecError::Code::BadVersion,
                         "unsupported FSQ1 version " + std::to_string(version));
    std::uint32_t width = in.u32();
    std::uint32_t height = in.u32();
    in.u16();  // quality_milli, provenance only
    in.u16();  // levels, provenance only
    if (width < 1 || height < 1)
        throw CodecError(CodecError::Code::BadTable, "invalid FSQ1 dimensions");

    std::array<std::uint8_t, 256> lengths{};
    for (auto& l : lengths) l = in.u8();

    // Table consistency: a complete canonical code (Kraft sum exactly 1)
    // or the single-symbol special case (one symbol, length 1).
    int present = 0;
    int max_len = 0;
    for (auto l : lengths) {
        if (l > 0) ++present;
        max_len = std::max<int>(max_len, l);
    }
    if (present == 0)
        throw CodecError(CodecError::Code::BadTable, "empty Huffman table");
    if (max_len > 64)
        throw CodecError(CodecError::Code::BadTable,
                         "Huffman code length exceeds 64 bits");
    bool single = present == 1 && max_len == 1;
    if (!single) {
        // Kraft sum scaled by 2^max_len must equal exactly 2^max_len.
        std::uint64_t kraft = 0;
        for (auto l : lengths)
            if (l > 0) kraft += std::uint64_t{1} << (max_len - l);
        if (kraft != (std::uint64_t{1} << max_len))
            throw CodecError(CodecError::Code::BadTable,
                             "Huffman table is not a complete code");
    }

    std::uint64_t bit_count = in.u64();
    std::uint64_t payload_bytes = (bit_count + 7) / 8;
    if (octets.size() - in.pos < payload_bytes)
        throw CodecError(CodecError::Code::Overrun,
                         "payload overrun: container shorter than bit count");
    if (octets.size() - in.pos > payload_bytes)
        throw CodecError(CodecError::Code::Overrun,
                         "trailing bytes after FSQ1 payload");

    // Canonical decode tables: first code value and first symbol index per
    // length, symbols in (length, value) order.
    auto codes = detail::canonical_codes(lengths);
    std::vector<int> symbols;
    for (int s = 0; s < 256; ++s)
        if (lengths[static_cast<std::size_t>(s)] > 0) symbols.push_back(s);
    std::sort(symbols.begin(), symbols.end(), [&](int a, int b) {
        if (lengths[static_cast<std::size_t>(a)] != lengths[static_cast<std::size_t>(b)])
            return lengths[static_cast<std::size_t>(a)] < lengths[static_cast<std::size_t>(b)];
        return a < b;
    });

    detail::BitReader bits(octets.data() + in.pos, bit_count);
    std::vector<std::uint8_t> rle;
    {
        std::uint64_t code = 0;
        int len = 0;
        std::size_t cursor = 0;  // index into `symbols` of first symbol at `len`
        while (bits.consumed() < bit_count) {
            int b = bits.next();
            code = (code << 1) | static_cast<std::uint64_t>(b);
            ++len;
            // Advance cursor past symbols shorter than len.
            while (cursor < symbols.size() &&
                   lengths[static_cast<std::size_t>(symbols[cursor])] < len)
                ++cursor;
            // Count symbols of exactly this length.
            std::size_t end = cursor;
            while (end < symbols.size() &&
                   lengths[static_cast<std::size_t>(symbols[end])] == len)
                ++end;
            if (end > cursor) {
                std::uint64_t first = codes[static_cast<std::size_t>(symbols[cursor])];
                if (code >= first && code < first + (end - cursor)) {
                    rle.push_back(static_cast<std::uint8_t>(
                        symbols[cursor + (code - first)]));
                    code = 0;
                    len = 0;
                    cursor = 0;
                    continue;
                }
            }
            if (len > max_len)
                throw CodecError(CodecError::Code::Overrun,
                                 "payload bits do not decode to a symbol");
        }
        if (len != 0)
            throw CodecError(CodecError::Code::Overrun,
                             "payload ends mid-symbol");
    }

    // Rebuild samples from the RLE token stream.
    Image img;
    img.width = width;
    img.height = height;
    img.channels = 1;
    std::uint64_t expected = std::uint64_t{width} * height;
    img.samples.reserve(expected);
    std::size_t i = 0;
    while (i < rle.size()) {
        std::uint8_t value = rle[i++];
        std::uint64_t run = 0;
        int shift = 0;
        while (true) {
            if (i >= rle.size())
                throw CodecError(CodecError::Code::Overrun,
                                 "RLE stream ends mid run length");
            std::uint8_t b = rle[i++];
            run |= (std::uint64_t{b} & 0x7F) << shift;
            if (!(b & 0x80)) break;
            shift += 7;
            if (shift > 63)
                throw CodecError(CodecError::Code::Overrun,
                                 "RLE run length varint too long");
        }
        if (run == 0 || img.samples.size() + run > expected)
            throw CodecError(CodecError::Code::Overrun,
                             "RLE runs exceed pixel count");
        img.samples.insert(img.samples.end(), run, value);
    }
    if (img.samples.size() != expected)
        throw CodecError(CodecError::Code::Overrun,
                         "RLE stream short: got " +
                             std::to_string(img.samples.size()) + " of " +
                             std::to_string(expected) + " samples");
    return img;
}

}  // namespace fsq1

// compressBitmap: quantize + RLE + canonical Huffman into a digested
// container.
inline CompressedDoc encode_fsq1(const Image& img, double quality) {
    CompressedDoc doc;
    doc.bytes = fsq1::encode_bytes(img, quality);
    doc.digest = sha256_hex(doc.bytes);
    doc.original_pixels = img.pixel_count();
    doc.quality = quality;
    return doc;
}

inline Image decode_fsq1(const std::vector<std::uint8_t>& octets) {
    return fsq1::decode(octets);
}

}  // namespace fieldsync::imaging
