#pragma once

// Device half of the sync engine: drains the durable queue over a
// FrameTransport with at-least-once delivery. Documents are chunked, every
// item waits for ACK/NACK, and failures back off with full jitter. All
// sleeping goes through the Clock so simulations run in virtual time.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fieldsync/backoff.hpp"
#include "fieldsync/queue.hpp"
#include "fieldsync/sha256.hpp"
#include "fieldsync/wire.hpp"

namespace fieldsync::syncq {

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock : public Clock {
public:
    std::int64_t now_ms() override { return records::wall_clock_ms(); }
    void sleep_ms(std::int64_t ms) override {
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
    static SystemClock& instance() {
        static SystemClock clock;
        return clock;
    }
};

struct SyncOptions {
    std::string device_id = "device";
    int batch = 64;                        // items attempted per round
    std::size_t chunk_size = 4096;         // document chunk bytes
    std::uint64_t seed = 1;                // jitter stream
    int max_rounds = 8;                    // passes before giving up
    std::int64_t response_timeout_ms = 2000;
    BackoffPolicy backoff{};
};

struct SyncReport {
    std::uint64_t sent = 0;       // item dispatch attempts
    std::uint64_t acked = 0;      // items acknowledged this session
    std::uint64_t retried = 0;    // dispatches beyond an item's first
    std::uint64_t bytes_sent = 0; // wire bytes pushed
    std::int64_t duration_ms = 0;
};

namespace detail {

// Sends one item's frames; returns wire bytes pushed.
inline std::uint64_t send_item_frames(const QueueItem& item,
                                      const std::vector<std::uint8_t>& payload,
                                      wire::FrameTransport& transport,
                                      std::size_t chunk_size) {
    std::uint64_t bytes = 0;
    auto push = [&](const wire::Frame& f) {
        transport.send(f);
        bytes += f.wire_size();
    };
    if (item.kind == ItemKind::RecordManifest) {
        push(wire::make_put_record(item.key, payload));
        return bytes;
    }
    DocumentPayload doc = parse_document_payload(payload);
    std::size_t total =
        std::max<std::size_t>(1, (doc.content.size() + chunk_size - 1) / chunk_size);
    for (std::size_t seq = 0; seq < total; ++seq) {
        std::size_t begin = seq * chunk_size;
        std::size_t end = std::min(doc.content.size(), begin + chunk_size);
        push(wire::make_put_doc_chunk(
            item.key, doc.doc_id, static_cast<std::uint32_t>(seq),
            static_cast<std::uint32_t>(total),
            std::vector<std::uint8_t>(doc.content.begin() + static_cast<std::ptrdiff_t>(begin),
                                      doc.content.begin() + static_cast<std::ptrdiff_t>(end))));
    }
    push(wire::make_doc_done(item.key, sha256_hex(doc.content)));
    return bytes;
}

}  // namespace detail

// Runs one sync session. Transport failure mid-session returns the partial
// report rather than throwing; protocol violations from the server abort
// the session with items left Pending.
inline SyncReport sync_session(SyncQueue& queue, wire::FrameTransport& transport,
                               const SyncOptions& opts,
                               Clock& clock = SystemClock::instance()) {
    if (opts.batch < 1) throw ValidationError("batch must be >= 1");
    SessionLock lock(queue.dir());
    SplitMix64 jitter(opts.seed);
    SyncReport report;
    std::int64_t started = clock.now_ms();

    try {
        transport.send(wire::make_hello(opts.device_id));
        report.bytes_sent += wire::make_hello(opts.device_id).wire_size();

        for (int round = 0; round < opts.max_rounds; ++round) {
            auto pending = queue.pending();
            if (pending.empty()) break;

            // Items still cooling down are skipped this pass; if nothing is
            // eligible yet, advance to the earliest gate instead of burning
            // a round.
            std::int64_t now = clock.now_ms();
            std::vector<QueueItem> eligible;
            std::int64_t earliest_gate = -1;
            for (const auto& item : pending) {
                if (item.next_eligible_ms <= now) {
                    if (eligible.size() <
                        static_cast<std::size_t>(opts.batch))
                        eligible.push_back(item);
                } else if (earliest_gate < 0 ||
                           item.next_eligible_ms < earliest_gate) {
                    earliest_gate = item.next_eligible_ms;
                }
            }
            if (eligible.empty()) {
                if (earliest_gate < 0) break;
                clock.sleep_ms(earliest_gate - now);
                --round;  // a pure wait is not an attempt
                continue;
            }

            for (const auto& item : eligible) {
                auto payload = queue.payload_of(item.key);
                queue.mark_in_flight(item.key, true);
                if (item.attempts > 0) ++report.retried;
                ++report.sent;
                report.bytes_sent += detail::send_item_frames(
                    item, payload, transport, opts.chunk_size);

                // Await this item's verdict; acks for other in-flight keys
                // arriving late are applied opportunistically.
                bool settled = false;
                std::int64_t deadline = clock.now_ms() + opts.response_timeout_ms;
                while (!settled) {
                    std::int64_t budget = deadline - clock.now_ms();
                    if (budget <= 0) break;
                    auto resp = transport.recv(budget);
                    if (!resp) break;
                    if (resp->type == wire::FrameType::Ack) {
                        std::string key = wire::parse_ack(*resp);
                        queue.mark_acked(key);
                        if (key == item.key) {
                            ++report.acked;
                            settled = true;
                        }
                    } else if (resp->type == wire::FrameType::Nack) {
                        auto nack = wire::parse_nack(*resp);
                        if (nack.reason == "protocol")
                            throw ProtocolError("server rejected the session");
                        if (nack.key == item.key) break;  // leave Pending
                    } else {
                        throw ProtocolError("unexpected frame type during sync");
                    }
                }
                if (!settled) {
                    std::int64_t delay =
                        opts.backoff.delay_ms(item.attempts, jitter);
                    queue.record_attempt(item.key, clock.now_ms() + delay);
                }
            }
        }

        transport.send(wire::make_bye());
        report.bytes_sent += wire::make_bye().wire_size();
    } catch (const TransportError&) {
        // Partial progress is the result; items stay Pending for next time.
    } catch (const ProtocolError&) {
        // Session aborted; everything unacked stays Pending.
    }

    report.duration_ms = clock.now_ms() - started;
    return report;
}

// Asks the middleware for current statuses. Ids the server does not know
// are simply absent from the result. A missing response is a timeout
// error, which is a different situation than an unknown id.
inline std::map<std::string, records::Status> status_pull(
    wire::FrameTransport& transport, const std::vector<std::string>& app_ids,
    std::int64_t timeout_ms = 2000) {
    if (app_ids.empty()) return {};
    transport.send(wire::make_status_req(app_ids));
    auto resp = transport.recv(timeout_ms);
    if (!resp) throw TimeoutError("no status response from server");
    if (resp->type != wire::FrameType::StatusResp)
        throw ProtocolError("expected STATUS_RESP, got frame type " +
                            std::to_string(static_cast<int>(resp->type)));
    return wire::parse_status_resp(*resp);
}

}  // namespace fieldsync::syncq
