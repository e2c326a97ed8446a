#pragma once

// Crash-durable store-and-forward queue. Every enqueue first writes the
// payload to a content-addressed blob file (fsynced, then renamed into
// place) and only then appends a journal entry, so a committed journal
// entry always has its payload on disk. Recovery replays the journal:
// committed items come back in order, InFlight reverts to Pending, a torn
// tail is dropped.
//
// Idempotency keys are SHA-256 over (kind tag || payload), so re-enqueuing
// identical content is a no-op returning the existing key.

#include <sys/file.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldsync/errors.hpp"
#include "fieldsync/journal.hpp"
#include "fieldsync/records.hpp"
#include "fieldsync/sha256.hpp"

namespace fieldsync::syncq {

enum class ItemKind : std::uint8_t { RecordManifest = 1, Document = 2 };

inline const char* to_string(ItemKind k) {
    return k == ItemKind::RecordManifest ? "record" : "document";
}

inline ItemKind item_kind_from_string(const std::string& s) {
    if (s == "record") return ItemKind::RecordManifest;
    if (s == "document") return ItemKind::Document;
    throw ParseError("unknown queue item kind \"" + s + "\"");
}

enum class ItemState : std::uint8_t { Pending, InFlight, Acked };

struct QueueItem {
    std::string key;          // SHA-256 hex, also the blob file name
    ItemKind kind = ItemKind::RecordManifest;
    std::string payload_path; // blob file, content-addressed by key
    int attempts = 0;
    std::int64_t enqueued_at = 0;  // ms epoch, strictly increasing per queue
    ItemState state = ItemState::Pending;
    std::int64_t next_eligible_ms = 0;  // backoff gate, in-memory only
};

// Document payloads carry their doc id in a tiny envelope so a retried
// upload can be routed without any queue-external state:
//   doc_id_len u16 LE | doc_id bytes | content bytes.
inline std::vector<std::uint8_t> make_document_payload(
    const std::string& doc_id, const std::vector<std::uint8_t>& content) {
    if (doc_id.empty() || doc_id.size() > 0xFFFF)
        throw ValidationError("doc id length out of range");
    std::vector<std::uint8_t> out;
    out.reserve(2 + doc_id.size() + content.size());
    out.push_back(static_cast<std::uint8_t>(doc_id.size() & 0xFF));
    out.push_back(static_cast<std::uint8_t>(doc_id.size() >> 8));
    out.insert(out.end(), doc_id.begin(), doc_id.end());
    out.insert(out.end(), content.begin(), content.end());
    return out;
}

struct DocumentPayload {
    std::string doc_id;
    std::vector<std::uint8_t> content;
};

inline DocumentPayload parse_document_payload(
    const std::vector<std::uint8_t>& payload) {
    if (payload.size() < 2)
        throw ParseError("document payload too short for envelope");
    std::size_t id_len = payload[0] | (std::size_t{payload[1]} << 8);
    if (payload.size() < 2 + id_len)
        throw ParseError("document payload shorter than its doc id");
    DocumentPayload out;
    out.doc_id.assign(payload.begin() + 2,
                      payload.begin() + 2 + static_cast<std::ptrdiff_t>(id_len));
    out.content.assign(payload.begin() + 2 + static_cast<std::ptrdiff_t>(id_len),
                       payload.end());
    return out;
}

inline std::string item_key(ItemKind kind,
                            const std::vector<std::uint8_t>& payload) {
    Sha256 h;
    std::uint8_t tag = static_cast<std::uint8_t>(kind);
    h.update(&tag, 1);
    h.update(payload.data(), payload.size());
    return to_hex(h.finish());
}

class SyncQueue {
public:
    // Opens (and if needed creates) a queue directory, replaying any
    // existing journal. This is both first-run setup and crash recovery.
    static SyncQueue open(const std::filesystem::path& dir) {
        return SyncQueue(dir);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::string enqueue(ItemKind kind, const std::vector<std::uint8_t>& payload,
                        std::int64_t now_ms = records::wall_clock_ms()) {
        if (payload.empty())
            throw ValidationError("queue payload must not be empty");
        if (kind == ItemKind::Document)
            parse_document_payload(payload);  // validate the envelope early
        std::string key = item_key(kind, payload);

        std::lock_guard lock(*mu_);
        if (by_key_.count(key)) return key;  // idempotent

        write_blob(key, payload);
        std::int64_t at = std::max(now_ms, last_enqueued_at_ + 1);
        nlohmann::json j{{"op", "enq"},
                         {"key", key},
                         {"kind", to_string(kind)},
                         {"at", at}};
        append_journal(j);

        QueueItem item;
        item.key = key;
        item.kind = kind;
        item.payload_path = (dir_ / "blobs" / key).string();
        item.enqueued_at = at;
        insert_item(std::move(item));
        return key;
    }

    void mark_acked(const std::string& key) {
        std::lock_guard lock(*mu_);
        auto it = by_key_.find(key);
        if (it == by_key_.end())
            throw StateError("cannot ack unknown key " + key);
        if (items_[it->second].state == ItemState::Acked) return;
        nlohmann::json j{{"op", "ack"}, {"key", key}};
        append_journal(j);
        items_[it->second].state = ItemState::Acked;
    }

    void mark_in_flight(const std::string& key, bool in_flight) {
        std::lock_guard lock(*mu_);
        auto it = by_key_.find(key);
        if (it == by_key_.end()) return;
        auto& item = items_[it->second];
        if (item.state == ItemState::Acked) return;
        item.state = in_flight ? ItemState::InFlight : ItemState::Pending;
    }

    void record_attempt(const std::string& key, std::int64_t next_eligible_ms) {
        std::lock_guard lock(*mu_);
        auto it = by_key_.find(key);
        if (it == by_key_.end()) return;
        auto& item = items_[it->second];
        ++item.attempts;
        item.next_eligible_ms = next_eligible_ms;
        if (item.state == ItemState::InFlight) item.state = ItemState::Pending;
    }

    std::vector<QueueItem> items() const {
        std::lock_guard lock(*mu_);
        return items_;
    }

    // Pending items in FIFO order (enqueued_at, then key).
    std::vector<QueueItem> pending() const {
        std::lock_guard lock(*mu_);
        std::vector<QueueItem> out;
        for (const auto& item : items_)
            if (item.state == ItemState::Pending) out.push_back(item);
        return out;
    }

    std::size_t acked_count() const {
        std::lock_guard lock(*mu_);
        std::size_t n = 0;
        for (const auto& item : items_)
            if (item.state == ItemState::Acked) ++n;
        return n;
    }

    std::vector<std::uint8_t> payload_of(const std::string& key) const {
        std::filesystem::path path = dir_ / "blobs" / key;
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw StorageError("missing blob for key " + key);
        std::fseek(f, 0, SEEK_END);
        long size = std::ftell(f);
        std::fseek(f, 0, SEEK_SET);
        std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
        if (size > 0 && std::fread(data.data(), 1, data.size(), f) != data.size()) {
            std::fclose(f);
            throw StorageError("short read on blob " + key);
        }
        std::fclose(f);
        return data;
    }

private:
    explicit SyncQueue(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir_ / "blobs");
        replay();
        writer_.emplace(dir_ / "journal.log");
    }

    void replay() {
        for (const auto& payload : read_journal(dir_ / "journal.log")) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(payload.begin(), payload.end());
            } catch (const nlohmann::json::parse_error&) {
                throw RecoveryError("journal entry is not valid JSON");
            }
            std::string op = j.at("op").get<std::string>();
            std::string key = j.at("key").get<std::string>();
            if (op == "enq") {
                if (by_key_.count(key)) continue;
                QueueItem item;
                item.key = key;
                item.kind = item_kind_from_string(j.at("kind").get<std::string>());
                item.payload_path = (dir_ / "blobs" / key).string();
                item.enqueued_at = j.at("at").get<std::int64_t>();
                insert_item(std::move(item));
            } else if (op == "ack") {
                auto it = by_key_.find(key);
                if (it != by_key_.end())
                    items_[it->second].state = ItemState::Acked;
            } else {
                throw RecoveryError("journal entry has unknown op \"" + op + "\"");
            }
        }
    }

    void insert_item(QueueItem&& item) {
        last_enqueued_at_ = std::max(last_enqueued_at_, item.enqueued_at);
        // enqueued_at is strictly monotonic, so appending keeps (enqueued_at,
        // key) order; the general insert only fires on hand-edited journals.
        auto less = [](const QueueItem& a, const QueueItem& b) {
            return std::tie(a.enqueued_at, a.key) < std::tie(b.enqueued_at, b.key);
        };
        if (items_.empty() || less(items_.back(), item)) {
            by_key_[item.key] = items_.size();
            items_.push_back(std::move(item));
            return;
        }
        auto pos = std::upper_bound(items_.begin(), items_.end(), item, less);
        items_.insert(pos, std::move(item));
        by_key_.clear();
        for (std::size_t i = 0; i < items_.size(); ++i) by_key_[items_[i].key] = i;
    }

    void write_blob(const std::string& key,
                    const std::vector<std::uint8_t>& payload) {
        std::filesystem::path final_path = dir_ / "blobs" / key;
        if (std::filesystem::exists(final_path)) return;
        std::filesystem::path tmp = final_path;
        tmp += ".tmp";
        int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd < 0)
            throw StorageError("cannot create blob " + tmp.string());
        std::size_t off = 0;
        while (off < payload.size()) {
            ssize_t n = ::write(fd, payload.data() + off, payload.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                ::close(fd);
                throw StorageError("blob write failed");
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            ::close(fd);
            throw StorageError("blob fsync failed");
        }
        ::close(fd);
        std::filesystem::rename(tmp, final_path);
    }

    void append_journal(const nlohmann::json& j) {
        std::string s = j.dump();
        writer_->append(std::vector<std::uint8_t>(s.begin(), s.end()));
    }

    std::filesystem::path dir_;
    std::optional<JournalWriter> writer_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    std::vector<QueueItem> items_;
    std::map<std::string, std::size_t> by_key_;
    std::int64_t last_enqueued_at_ = 0;
};

// Exclusive advisory lock guarding one sync session per queue directory.
class SessionLock {
public:
    explicit SessionLock(const std::filesystem::path& dir) {
        fd_ = ::open((dir / "lock").c_str(), O_WRONLY | O_CREAT, 0644);
        if (fd_ < 0) throw StorageError("cannot open queue lock file");
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw StateError("another sync session holds the queue lock");
        }
    }
    SessionLock(const SessionLock&) = delete;
    SessionLock& operator=(const SessionLock&) = delete;
    ~SessionLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

private:
    int fd_ = -1;
};

}  // namespace fieldsync::syncq
