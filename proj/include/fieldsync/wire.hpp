#pragma once

// Wire protocol shared by the device client and the middleware. One frame
// on the wire is: length u32 LE (of body) | type u8 | body. Inside
// bodies, all integers are little-endian, idempotency keys and digests
// travel as 32 raw bytes, and every variable-length field ("len-prefixed")
// carries a u32 LE byte count.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fieldsync/errors.hpp"
#include "fieldsync/records.hpp"

namespace fieldsync::wire {

enum class FrameType : std::uint8_t {
    Hello = 0x01,
    PutRecord = 0x02,
    PutDocChunk = 0x03,
    DocDone = 0x04,
    Ack = 0x05,
    Nack = 0x06,
    StatusReq = 0x07,
    StatusResp = 0x08,
    Bye = 0x09,
};

inline constexpr std::uint8_t kProtoVersion = 1;

struct Frame {
    FrameType type = FrameType::Bye;
    std::vector<std::uint8_t> body;

    bool operator==(const Frame&) const = default;

    // Bytes on the wire including the 5-byte header; the simulator charges
    // link time for this size.
    std::size_t wire_size() const { return 5 + body.size(); }
};

// Byte-stream-of-frames endpoint. recv returns nullopt on timeout; hard
// failures (peer gone) throw TransportError.
class FrameTransport {
public:
    virtual ~FrameTransport() = default;
    virtual void send(const Frame& frame) = 0;
    virtual std::optional<Frame> recv(std::int64_t timeout_ms) = 0;
};

namespace detail {

struct BodyWriter {
    std::vector<std::uint8_t> out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void raw(const std::uint8_t* data, std::size_t n) {
        out.insert(out.end(), data, data + n);
    }
    void blob(const std::vector<std::uint8_t>& b) {
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b.data(), b.size());
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    }
};

struct BodyReader {
    const std::vector<std::uint8_t>& body;
    std::size_t pos = 0;

    std::uint8_t u8() {
        need(1);
        return body[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(body[pos] |
                                                     (body[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t{body[pos + static_cast<std::size_t>(i)]} << (8 * i);
        pos += 4;
        return v;
    }
    std::vector<std::uint8_t> raw(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> out(body.begin() + static_cast<std::ptrdiff_t>(pos),
                                      body.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return out;
    }
    std::vector<std::uint8_t> blob() { return raw(u32()); }
    std::string str() {
        auto b = blob();
        return std::string(b.begin(), b.end());
    }
    void expect_end() const {
        if (pos != body.size())
            throw ProtocolError("frame body has " +
                                std::to_string(body.size() - pos) +
                                " trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (body.size() - pos < n)
            throw ProtocolError("frame body truncated");
    }
};

}  // namespace detail

// Hex key (as the queue and stores use) to the 32 raw bytes on the wire.
inline std::vector<std::uint8_t> key_to_raw(const std::string& hex) {
    if (hex.size() != 64) throw ProtocolError("key must be 64 hex chars");
    std::vector<std::uint8_t> out(32);
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw ProtocolError("key contains a non-hex character");
    };
    for (std::size_t i = 0; i < 32; ++i)
        out[i] = static_cast<std::uint8_t>((nib(hex[2 * i]) << 4) |
                                           nib(hex[2 * i + 1]));
    return out;
}

inline std::string raw_to_key(const std::vector<std::uint8_t>& raw) {
    if (raw.size() != 32) throw ProtocolError("raw key must be 32 bytes");
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : raw) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

// --------------------------------------------------------------------------
// Frame encode/decode against the raw byte stream.

inline std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(frame.wire_size());
    std::uint32_t len = static_cast<std::uint32_t>(frame.body.size());
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    out.push_back(static_cast<std::uint8_t>(frame.type));
    out.insert(out.end(), frame.body.begin(), frame.body.end());
    return out;
}

// Parses one frame from the front of `buf`; returns nullopt if more bytes
// are needed. Consumed bytes are erased.
inline std::optional<Frame> try_decode_frame(std::vector<std::uint8_t>& buf) {
    if (buf.size() < 5) return std::nullopt;
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= std::uint32_t{buf[static_cast<std::size_t>(i)]} << (8 * i);
    if (len > (64u << 20))
        throw ProtocolError("frame body of " + std::to_string(len) +
                            " bytes exceeds the 64 MiB bound");
    if (buf.size() < 5 + len) return std::nullopt;
    Frame frame;
    std::uint8_t type = buf[4];
    if (type < 0x01 || type > 0x09)
        throw ProtocolError("unknown frame type " + std::to_string(type));
    frame.type = static_cast<FrameType>(type);
    frame.body.assign(buf.begin() + 5, buf.begin() + 5 + len);
    buf.erase(buf.begin(), buf.begin() + 5 + len);
    return frame;
}

// --------------------------------------------------------------------------
// Typed builders and parsers.

struct Hello {
    std::uint8_t proto_version = kProtoVersion;
    std::string device_id;
};

inline Frame make_hello(const std::string& device_id) {
    detail::BodyWriter w;
    w.u8(kProtoVersion);
    w.str(device_id);
    return {FrameType::Hello, std::move(w.out)};
}

inline Hello parse_hello(const Frame& f) {
    detail::BodyReader r{f.body};
    Hello h;
    h.proto_version = r.u8();
    h.device_id = r.str();
    r.expect_end();
    return h;
}

struct PutRecord {
    std::string key;  // hex
    std::vector<std::uint8_t> manifest;
};

inline Frame make_put_record(const std::string& key,
                             const std::vector<std::uint8_t>& manifest) {
    detail::BodyWriter w;
    auto raw = key_to_raw(key);
    w.raw(raw.data(), raw.size());
    w.blob(manifest);
    return {FrameType::PutRecord, std::move(w.out)};
}

inline PutRecord parse_put_record(const Frame& f) {
    detail::BodyReader r{f.body};
    PutRecord p;
    p.key = raw_to_key(r.raw(32));
    p.manifest = r.blob();
    r.expect_end();
    return p;
}

struct PutDocChunk {
    std::string key;  // hex
    std::string doc_id;
    std::uint32_t seq = 0;
    std::uint32_t total = 0;
    std::vector<std::uint8_t> chunk;
};

inline Frame make_put_doc_chunk(const std::string& key, const std::string& doc_id,
                                std::uint32_t seq, std::uint32_t total,
                                std::vector<std::uint8_t> chunk) {
    detail::BodyWriter w;
    auto raw = key_to_raw(key);
    w.raw(raw.data(), raw.size());
    w.str(doc_id);
    w.u32(seq);
    w.u32(total);
    w.blob(chunk);
    return {FrameType::PutDocChunk, std::move(w.out)};
}

inline PutDocChunk parse_put_doc_chunk(const Frame& f) {
    detail::BodyReader r{f.body};
    PutDocChunk p;
    p.key = raw_to_key(r.raw(32));
    p.doc_id = r.str();
    p.seq = r.u32();
    p.total = r.u32();
    p.chunk = r.blob();
    r.expect_end();
    return p;
}

struct DocDone {
    std::string key;     // hex
    std::string digest;  // hex of the reassembled content
};

inline Frame make_doc_done(const std::string& key, const std::string& digest) {
    detail::BodyWriter w;
    auto k = key_to_raw(key);
    auto d = key_to_raw(digest);
    w.raw(k.data(), k.size());
    w.raw(d.data(), d.size());
    return {FrameType::DocDone, std::move(w.out)};
}

inline DocDone parse_doc_done(const Frame& f) {
    detail::BodyReader r{f.body};
    DocDone p;
    p.key = raw_to_key(r.raw(32));
    p.digest = raw_to_key(r.raw(32));
    r.expect_end();
    return p;
}

inline Frame make_ack(const std::string& key) {
    detail::BodyWriter w;
    auto raw = key_to_raw(key);
    w.raw(raw.data(), raw.size());
    return {FrameType::Ack, std::move(w.out)};
}

inline std::string parse_ack(const Frame& f) {
    detail::BodyReader r{f.body};
    std::string key = raw_to_key(r.raw(32));
    r.expect_end();
    return key;
}

struct Nack {
    std::string key;
    std::string reason;
};

// Protocol-level NACKs that relate to no specific item use the zero key.
inline const std::string kNullKey(64, '0');

inline Frame make_nack(const std::string& key, const std::string& reason) {
    detail::BodyWriter w;
    auto raw = key_to_raw(key);
    w.raw(raw.data(), raw.size());
    w.str(reason);
    return {FrameType::Nack, std::move(w.out)};
}

inline Nack parse_nack(const Frame& f) {
    detail::BodyReader r{f.body};
    Nack n;
    n.key = raw_to_key(r.raw(32));
    n.reason = r.str();
    r.expect_end();
    return n;
}

inline Frame make_status_req(const std::vector<std::string>& app_ids) {
    if (app_ids.size() > 0xFFFF)
        throw ProtocolError("status request exceeds 65535 ids");
    detail::BodyWriter w;
    w.u16(static_cast<std::uint16_t>(app_ids.size()));
    for (const auto& id : app_ids) w.str(id);
    return {FrameType::StatusReq, std::move(w.out)};
}

inline std::vector<std::string> parse_status_req(const Frame& f) {
    detail::BodyReader r{f.body};
    std::uint16_t count = r.u16();
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) ids.push_back(r.str());
    r.expect_end();
    return ids;
}

inline Frame make_status_resp(
    const std::map<std::string, records::Status>& statuses) {
    if (statuses.size() > 0xFFFF)
        throw ProtocolError("status response exceeds 65535 ids");
    detail::BodyWriter w;
    w.u16(static_cast<std::uint16_t>(statuses.size()));
    for (const auto& [id, status] : statuses) {
        w.str(id);
        w.u8(static_cast<std::uint8_t>(status));
    }
    return {FrameType::StatusResp, std::move(w.out)};
}

inline std::map<std::string, records::Status> parse_status_resp(const Frame& f) {
    detail::BodyReader r{f.body};
    std::uint16_t count = r.u16();
    std::map<std::string, records::Status> out;
    for (std::uint16_t i = 0; i < count; ++i) {
        std::string id = r.str();
        std::uint8_t s = r.u8();
        if (s > 4) throw ProtocolError("status byte out of range");
        out[id] = static_cast<records::Status>(s);
    }
    r.expect_end();
    return out;
}

inline Frame make_bye() { return {FrameType::Bye, {}}; }

}  // namespace fieldsync::wire
