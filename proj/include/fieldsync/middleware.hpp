#pragma once

// Middleware sync engine: ingests records and documents over the wire
// protocol, deduplicates by idempotency key, persists, answers status
// queries, and forwards complete applications to the core stub. Clients
// never reach the core: CoreStub has no wire listener and is touched only
// through forward_to_core / core_decide.
//
// Persistence layout under the data directory:
//   records/<app_id>.json   canonical manifest, current server-side state
//   blobs/<digest>          FSQ1 document bytes, content-addressed
//   keys.log                applied idempotency keys (journal format)

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fieldsync/errors.hpp"
#include "fieldsync/journal.hpp"
#include "fieldsync/queue.hpp"
#include "fieldsync/records.hpp"
#include "fieldsync/sha256.hpp"
#include "fieldsync/wire.hpp"

namespace fieldsync::middleware {

// Deterministic stand-in for the core lending application. Approves an
// application when the low bit of SHA-256(app_id) is 0, rejects otherwise.
struct CoreStub {
    struct Event {
        std::string app_id;
        std::string event;  // "application-forwarded"
    };
    std::vector<Event> received;

    static records::Status decide(const std::string& app_id) {
        auto digest = sha256(app_id.data(), app_id.size());
        return (digest[31] & 1) == 0 ? records::Status::Approved
                                     : records::Status::Rejected;
    }
};

struct SessionState {
    std::string device_id;
    bool saw_hello = false;
    bool should_close = false;
};

class ServerStore {
public:
    explicit ServerStore(const std::filesystem::path& dir) : dir_(dir) {
        namespace fs = std::filesystem;
        fs::create_directories(dir_ / "records");
        fs::create_directories(dir_ / "blobs");
        for (const auto& entry : fs::directory_iterator(dir_ / "records")) {
            if (entry.path().extension() != ".json") continue;
            auto bytes = read_file(entry.path());
            auto rec = records::from_manifest(bytes);
            records_[rec.app_id] = std::move(rec);
        }
        for (const auto& entry : fs::directory_iterator(dir_ / "blobs"))
            blobs_.insert(entry.path().filename().string());
        for (const auto& payload : syncq::read_journal(dir_ / "keys.log"))
            applied_keys_.insert(std::string(payload.begin(), payload.end()));
        keys_log_.emplace(dir_ / "keys.log");
    }

    // Processes one client frame, returning the response frames.
    std::vector<wire::Frame> handle_frame(const wire::Frame& frame,
                                          SessionState& session) {
        std::lock_guard lock(mu_);
        try {
            switch (frame.type) {
                case wire::FrameType::Hello: {
                    auto hello = wire::parse_hello(frame);
                    if (hello.proto_version != wire::kProtoVersion) {
                        session.should_close = true;
                        return {wire::make_nack(wire::kNullKey, "protocol")};
                    }
                    session.device_id = hello.device_id;
                    session.saw_hello = true;
                    return {};
                }
                case wire::FrameType::PutRecord:
                    return {handle_put_record(wire::parse_put_record(frame))};
                case wire::FrameType::PutDocChunk:
                    return handle_put_doc_chunk(wire::parse_put_doc_chunk(frame));
                case wire::FrameType::DocDone:
                    return {handle_doc_done(wire::parse_doc_done(frame))};
                case wire::FrameType::StatusReq: {
                    auto ids = wire::parse_status_req(frame);
                    std::map<std::string, records::Status> found;
                    for (const auto& id : ids) {
                        auto it = records_.find(id);
                        if (it != records_.end()) found[id] = it->second.status;
                    }
                    return {wire::make_status_resp(found)};
                }
                case wire::FrameType::Bye:
                    session.should_close = true;
                    return {};
                default:
                    // Server-to-client types arriving here are a protocol
                    // violation.
                    session.should_close = true;
                    return {wire::make_nack(wire::kNullKey, "protocol")};
            }
        } catch (const ProtocolError&) {
            session.should_close = true;
            return {wire::make_nack(wire::kNullKey, "protocol")};
        }
    }

    // Moves every complete application (manifest plus all declared
    // document blobs) from Submitted to UnderReview and emits it to the
    // core outbox exactly once. Partial applications are skipped.
    std::size_t forward_to_core(CoreStub& core) {
        std::lock_guard lock(mu_);
        std::size_t forwarded = 0;
        for (auto& [app_id, rec] : records_) {
            if (rec.status != records::Status::Submitted) continue;
            bool complete = std::all_of(
                rec.documents.begin(), rec.documents.end(),
                [&](const records::DocumentRef& d) { return blobs_.count(d.digest) > 0; });
            if (!complete) continue;
            rec = records::transition(rec, records::Status::UnderReview);
            persist_record(rec);
            core.received.push_back({app_id, "application-forwarded"});
            ++forwarded;
        }
        return forwarded;
    }

    // Applies the core's deterministic decision to every UnderReview
    // application. Returns how many were decided.
    std::size_t core_decide(CoreStub& core) {
        std::lock_guard lock(mu_);
        std::size_t decided = 0;
        for (auto& [app_id, rec] : records_) {
            if (rec.status != records::Status::UnderReview) continue;
            rec = records::transition(rec, core.decide(app_id));
            persist_record(rec);
            ++decided;
        }
        return decided;
    }

    std::size_t applied_key_count() const {
        std::lock_guard lock(mu_);
        return applied_keys_.size();
    }

    std::optional<records::ApplicationRecord> record_of(
        const std::string& app_id) const {
        std::lock_guard lock(mu_);
        auto it = records_.find(app_id);
        if (it == records_.end()) return std::nullopt;
        return it->second;
    }

    std::map<std::string, records::ApplicationRecord> all_records() const {
        std::lock_guard lock(mu_);
        return records_;
    }

    bool has_blob(const std::string& digest) const {
        std::lock_guard lock(mu_);
        return blobs_.count(digest) > 0;
    }

    std::vector<std::uint8_t> blob_bytes(const std::string& digest) const {
        std::lock_guard lock(mu_);
        if (!blobs_.count(digest)) throw StorageError("no blob " + digest);
        return read_file(dir_ / "blobs" / digest);
    }

private:
    wire::Frame handle_put_record(const wire::PutRecord& put) {
        if (applied_keys_.count(put.key)) return wire::make_ack(put.key);
        records::ApplicationRecord rec;
        try {
            rec = records::from_manifest(put.manifest);
        } catch (const ParseError&) {
            return wire::make_nack(put.key, "bad-manifest");
        }
        // Ingested records land as Submitted whatever the device had.
        rec.status = records::Status::Submitted;
        auto existing = records_.find(rec.app_id);
        if (existing != records_.end() &&
            existing->second.status != records::Status::Submitted) {
            // The application already moved on; a replacement now would
            // walk the status backwards.
            return wire::make_nack(put.key, "conflict");
        }
        records_[rec.app_id] = rec;
        persist_record(rec);
        apply_key(put.key);
        return wire::make_ack(put.key);
    }

    std::vector<wire::Frame> handle_put_doc_chunk(const wire::PutDocChunk& chunk) {
        if (applied_keys_.count(chunk.key)) return {};  // duplicate delivery
        if (chunk.total == 0 || chunk.seq >= chunk.total)
            return {wire::make_nack(chunk.key, "bad-chunk")};
        auto& buffer = chunk_buffers_[chunk.key];
        buffer.doc_id = chunk.doc_id;
        buffer.total = chunk.total;
        buffer.chunks[chunk.seq] = chunk.chunk;
        return {};
    }

    wire::Frame handle_doc_done(const wire::DocDone& done) {
        if (applied_keys_.count(done.key)) return wire::make_ack(done.key);
        auto it = chunk_buffers_.find(done.key);
        if (it == chunk_buffers_.end())
            return wire::make_nack(done.key, "unknown-key");
        auto& buffer = it->second;
        if (buffer.chunks.size() != buffer.total) {
            chunk_buffers_.erase(it);
            return wire::make_nack(done.key, "incomplete");
        }
        std::vector<std::uint8_t> content;
        for (auto& [seq, bytes] : buffer.chunks)
            content.insert(content.end(), bytes.begin(), bytes.end());
        std::string doc_id = buffer.doc_id;
        chunk_buffers_.erase(it);

        std::string digest = sha256_hex(content);
        if (digest != done.digest)
            return wire::make_nack(done.key, "bad-digest");
        // Cross-check against any record that declares this document.
        for (const auto& [app_id, rec] : records_) {
            for (const auto& d : rec.documents) {
                if (d.doc_id == doc_id && d.digest != digest)
                    return wire::make_nack(done.key, "bad-digest");
            }
        }
        persist_blob(digest, content);
        blobs_.insert(digest);
        apply_key(done.key);
        return wire::make_ack(done.key);
    }

    void apply_key(const std::string& key) {
        keys_log_->append(std::vector<std::uint8_t>(key.begin(), key.end()));
        applied_keys_.insert(key);
    }

    void persist_record(const records::ApplicationRecord& rec) {
        auto bytes = records::to_manifest(rec);
        std::filesystem::path final_path = dir_ / "records" / (rec.app_id + ".json");
        std::filesystem::path tmp = final_path;
        tmp += ".tmp";
        write_file_synced(tmp, bytes);
        std::filesystem::rename(tmp, final_path);
    }

    void persist_blob(const std::string& digest,
                      const std::vector<std::uint8_t>& content) {
        std::filesystem::path final_path = dir_ / "blobs" / digest;
        if (std::filesystem::exists(final_path)) return;
        std::filesystem::path tmp = final_path;
        tmp += ".tmp";
        write_file_synced(tmp, content);
        std::filesystem::rename(tmp, final_path);
    }

    static std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
        std::FILE* f = std::fopen(p.c_str(), "rb");
        if (!f) throw StorageError("cannot read " + p.string());
        std::fseek(f, 0, SEEK_END);
        long size = std::ftell(f);
        std::fseek(f, 0, SEEK_SET);
        std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
        if (size > 0 && std::fread(data.data(), 1, data.size(), f) != data.size()) {
            std::fclose(f);
            throw StorageError("short read on " + p.string());
        }
        std::fclose(f);
        return data;
    }

    static void write_file_synced(const std::filesystem::path& p,
                                  const std::vector<std::uint8_t>& bytes) {
        int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd < 0) throw StorageError("cannot create " + p.string());
        std::size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                ::close(fd);
                throw StorageError("write failed on " + p.string());
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            ::close(fd);
            throw StorageError("fsync failed on " + p.string());
        }
        ::close(fd);
    }

    struct ChunkBuffer {
        std::string doc_id;
        std::uint32_t total = 0;
        std::map<std::uint32_t, std::vector<std::uint8_t>> chunks;
    };

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, records::ApplicationRecord> records_;
    std::set<std::string> blobs_;
    std::set<std::string> applied_keys_;
    std::map<std::string, ChunkBuffer> chunk_buffers_;
    std::optional<syncq::JournalWriter> keys_log_;
};

// Free-function spellings used by the scenario runner and the CLI.
inline std::size_t forward_to_core(ServerStore& store, CoreStub& core) {
    return store.forward_to_core(core);
}

inline std::size_t core_decide(CoreStub& core, ServerStore& store) {
    return store.core_decide(core);
}

}  // namespace fieldsync::middleware
