#pragma once

// Loan-application data model: need capture, attached KYC document
// references, and the status lifecycle reported back to the field agent.
// Records are immutable values; operations return updated copies. The
// wire form is canonical JSON (sorted keys, UTF-8, no insignificant
// whitespace) so serialization is injective and byte-stable.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fieldsync/errors.hpp"
#include "fieldsync/fsq1.hpp"
#include "fieldsync/rng.hpp"

namespace fieldsync::records {

enum class Status : std::uint8_t {
    Draft = 0,
    Submitted = 1,
    UnderReview = 2,
    Approved = 3,
    Rejected = 4,
};

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Draft: return "Draft";
        case Status::Submitted: return "Submitted";
        case Status::UnderReview: return "UnderReview";
        case Status::Approved: return "Approved";
        case Status::Rejected: return "Rejected";
    }
    return "?";
}

inline Status status_from_string(const std::string& s) {
    if (s == "Draft") return Status::Draft;
    if (s == "Submitted") return Status::Submitted;
    if (s == "UnderReview") return Status::UnderReview;
    if (s == "Approved") return Status::Approved;
    if (s == "Rejected") return Status::Rejected;
    throw ParseError("unknown status \"" + s + "\"");
}

// Lifecycle edges: Draft -> Submitted -> UnderReview -> Approved|Rejected.
inline bool is_legal_transition(Status from, Status to) {
    switch (from) {
        case Status::Draft: return to == Status::Submitted;
        case Status::Submitted: return to == Status::UnderReview;
        case Status::UnderReview:
            return to == Status::Approved || to == Status::Rejected;
        default: return false;
    }
}

enum class DocumentKind : std::uint8_t {
    IdentityProof,
    AddressProof,
    IncomeProof,
    Other,
};

inline const char* to_string(DocumentKind k) {
    switch (k) {
        case DocumentKind::IdentityProof: return "identity-proof";
        case DocumentKind::AddressProof: return "address-proof";
        case DocumentKind::IncomeProof: return "income-proof";
        case DocumentKind::Other: return "other";
    }
    return "?";
}

inline DocumentKind document_kind_from_string(const std::string& s) {
    if (s == "identity-proof") return DocumentKind::IdentityProof;
    if (s == "address-proof") return DocumentKind::AddressProof;
    if (s == "income-proof") return DocumentKind::IncomeProof;
    if (s == "other") return DocumentKind::Other;
    throw ParseError("unknown document kind \"" + s + "\"");
}

struct DocumentRef {
    std::string doc_id;
    DocumentKind kind = DocumentKind::Other;
    std::string digest;  // SHA-256 hex of the FSQ1 bytes
    std::uint64_t size_bytes = 0;

    bool operator==(const DocumentRef&) const = default;
};

struct ApplicationRecord {
    std::string app_id;
    std::string customer_name;
    std::string region_id;
    std::int64_t need_amount = 0;  // currency minor units
    std::string need_details;
    std::vector<DocumentRef> documents;
    Status status = Status::Draft;
    std::int64_t updated_at = 0;  // ms since epoch

    bool operator==(const ApplicationRecord&) const = default;
};

inline std::int64_t wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace detail {
inline std::string fresh_app_id() {
    static thread_local SplitMix64 rng(
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count()) ^
        fnv1a64("app-id") ^
        (std::hash<std::thread::id>{}(std::this_thread::get_id()) * 0x9E3779B9ull));
    return uuid_from(rng);
}

inline bool is_hex64(const std::string& s) {
    if (s.size() != 64) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}
}  // namespace detail

inline ApplicationRecord new_application(const std::string& customer_name,
                                         const std::string& region_id,
                                         std::int64_t need_amount,
                                         const std::string& need_details,
                                         std::optional<std::string> app_id = {},
                                         std::int64_t now_ms = wall_clock_ms()) {
    if (customer_name.empty())
        throw ValidationError("customer name must not be empty");
    if (region_id.empty()) throw ValidationError("region id must not be empty");
    if (need_amount <= 0)
        throw ValidationError("need amount must be positive, got " +
                              std::to_string(need_amount));
    ApplicationRecord rec;
    rec.app_id = app_id.value_or(detail::fresh_app_id());
    if (rec.app_id.empty()) throw ValidationError("app id must not be empty");
    rec.customer_name = customer_name;
    rec.region_id = region_id;
    rec.need_amount = need_amount;
    rec.need_details = need_details;
    rec.status = Status::Draft;
    rec.updated_at = now_ms;
    return rec;
}

// Appends a reference with an already-known digest. Used by the high-level
// attach and by ingest paths that never see the raw bytes.
inline ApplicationRecord attach_reference(const ApplicationRecord& rec,
                                          DocumentKind kind,
                                          const std::string& doc_id,
                                          const std::string& digest,
                                          std::uint64_t size_bytes,
                                          std::int64_t now_ms = wall_clock_ms()) {
    if (rec.status != Status::Draft && rec.status != Status::Submitted)
        throw StateError("cannot attach documents to a record in state " +
                         std::string(to_string(rec.status)));
    if (!detail::is_hex64(digest))
        throw ValidationError("document digest must be 64 lowercase hex chars");
    if (size_bytes == 0)
        throw ValidationError("document size must be positive");
    if (doc_id.empty()) throw ValidationError("doc id must not be empty");
    for (const auto& d : rec.documents) {
        if (d.digest == digest)
            throw ValidationError("document with digest " + digest +
                                  " already attached");
        if (d.doc_id == doc_id)
            throw ValidationError("document id " + doc_id + " already attached");
    }
    ApplicationRecord out = rec;
    out.documents.push_back({doc_id, kind, digest, size_bytes});
    out.updated_at = now_ms;
    return out;
}

inline ApplicationRecord attach_document(const ApplicationRecord& rec,
                                         DocumentKind kind,
                                         const imaging::CompressedDoc& doc,
                                         std::int64_t now_ms = wall_clock_ms()) {
    // Document ids are content-derived: stable across retries.
    std::string doc_id = "doc-" + doc.digest.substr(0, 16);
    return attach_reference(rec, kind, doc_id, doc.digest, doc.bytes.size(),
                            now_ms);
}

inline ApplicationRecord transition(const ApplicationRecord& rec, Status next,
                                    std::int64_t now_ms = wall_clock_ms()) {
    if (!is_legal_transition(rec.status, next))
        throw StateError(std::string("illegal transition ") +
                         to_string(rec.status) + " -> " + to_string(next));
    ApplicationRecord out = rec;
    out.status = next;
    out.updated_at = now_ms;
    return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON manifest. nlohmann::json orders object keys, and dump()
// emits no insignificant whitespace, which together give the canonical
// form: serialize is injective and byte-stable across runs.

inline std::vector<std::uint8_t> to_manifest(const ApplicationRecord& rec) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : rec.documents) {
        docs.push_back({{"doc_id", d.doc_id},
                        {"kind", to_string(d.kind)},
                        {"digest", d.digest},
                        {"size_bytes", d.size_bytes}});
    }
    nlohmann::json j{{"app_id", rec.app_id},
                     {"customer_name", rec.customer_name},
                     {"region_id", rec.region_id},
                     {"need_amount", rec.need_amount},
                     {"need_details", rec.need_details},
                     {"documents", docs},
                     {"status", to_string(rec.status)},
                     {"updated_at", rec.updated_at}};
    std::string s = j.dump();
    return {s.begin(), s.end()};
}

inline ApplicationRecord from_manifest(const std::vector<std::uint8_t>& octets) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(octets.begin(), octets.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what(),
                         static_cast<std::size_t>(e.byte));
    }
    ApplicationRecord rec;
    try {
        rec.app_id = j.at("app_id").get<std::string>();
        rec.customer_name = j.at("customer_name").get<std::string>();
        rec.region_id = j.at("region_id").get<std::string>();
        rec.need_amount = j.at("need_amount").get<std::int64_t>();
        rec.need_details = j.at("need_details").get<std::string>();
        rec.status = status_from_string(j.at("status").get<std::string>());
        rec.updated_at = j.at("updated_at").get<std::int64_t>();
        for (const auto& d : j.at("documents")) {
            DocumentRef ref;
            ref.doc_id = d.at("doc_id").get<std::string>();
            ref.kind = document_kind_from_string(d.at("kind").get<std::string>());
            ref.digest = d.at("digest").get<std::string>();
            ref.size_bytes = d.at("size_bytes").get<std::uint64_t>();
            rec.documents.push_back(std::move(ref));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what());
    }
    if (rec.app_id.empty() || rec.region_id.empty())
        throw ParseError("manifest missing app_id or region_id");
    if (rec.need_amount <= 0)
        throw ParseError("manifest need_amount must be positive");
    std::set<std::string> ids, digests;
    for (const auto& d : rec.documents) {
        if (!detail::is_hex64(d.digest))
            throw ParseError("manifest document digest malformed");
        if (!ids.insert(d.doc_id).second || !digests.insert(d.digest).second)
            throw ParseError("manifest documents must be distinct");
    }
    return rec;
}

}  // namespace fieldsync::records
