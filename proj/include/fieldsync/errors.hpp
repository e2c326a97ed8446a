#pragma once

#include <stdexcept>
#include <string>

namespace fieldsync {

// Input bytes or text that cannot be parsed (PNM headers, manifests,
// scenario files). Carries the byte offset where parsing gave up when
// one is known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    explicit ParseError(const std::string& what)
        : std::runtime_error(what), offset_(0) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// FSQ1 container problems. `code` distinguishes the decode failure classes.
class CodecError : public std::runtime_error {
public:
    enum class Code { BadMagic, BadVersion, BadTable, Overrun, Internal };
    CodecError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

// Violated preconditions on domain values (quality out of range, empty
// name, non-positive amount, dimension mismatch).
class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Illegal record lifecycle move or mutation of a terminal record.
class StateError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures in the queue or store.
class StorageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Journal replay found a committed entry whose checksum does not match.
class RecoveryError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wire-level failures: malformed frames, unexpected message sequences.
class ProtocolError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The peer or network went away (connect refused, socket closed).
class TransportError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A request that got no answer in time. Distinct from "the server
// answered and the id was unknown".
class TimeoutError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad scenario or CLI configuration.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fieldsync
