#pragma once

// Append-only write-ahead journal. Entry layout: len u32 LE | crc32 u32 LE
// | payload. Appends are fsynced before returning. Replay stops at a torn
// tail (incomplete header or short payload at end of file) and rejects a
// fully-present entry whose checksum does not match.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldsync/crc32.hpp"
#include "fieldsync/errors.hpp"

namespace fieldsync::syncq {

class JournalWriter {
public:
    explicit JournalWriter(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd_ < 0)
            throw StorageError("cannot open journal " + path.string() + ": " +
                               std::strerror(errno));
    }

    JournalWriter(const JournalWriter&) = delete;
    JournalWriter& operator=(const JournalWriter&) = delete;
    JournalWriter(JournalWriter&& other) noexcept : fd_(other.fd_) {
        other.fd_ = -1;
    }

    ~JournalWriter() {
        if (fd_ >= 0) ::close(fd_);
    }

    void append(const std::vector<std::uint8_t>& payload) {
        std::vector<std::uint8_t> entry(8 + payload.size());
        std::uint32_t len = static_cast<std::uint32_t>(payload.size());
        std::uint32_t crc = crc32(payload.data(), payload.size());
        for (int i = 0; i < 4; ++i) {
            entry[static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>(len >> (8 * i));
            entry[static_cast<std::size_t>(4 + i)] =
                static_cast<std::uint8_t>(crc >> (8 * i));
        }
        std::memcpy(entry.data() + 8, payload.data(), payload.size());
        std::size_t off = 0;
        while (off < entry.size()) {
            ssize_t n = ::write(fd_, entry.data() + off, entry.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw StorageError(std::string("journal write failed: ") +
                                   std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0)
            throw StorageError(std::string("journal fsync failed: ") +
                               std::strerror(errno));
    }

private:
    int fd_ = -1;
};

// Committed entries in order. Torn trailing bytes are discarded; a
// checksum mismatch on a complete entry is corruption and throws.
inline std::vector<std::vector<std::uint8_t>> read_journal(
    const std::filesystem::path& path) {
    std::vector<std::vector<std::uint8_t>> entries;
    if (!std::filesystem::exists(path)) return entries;

    std::vector<std::uint8_t> data;
    {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f)
            throw StorageError("cannot read journal " + path.string());
        std::fseek(f, 0, SEEK_END);
        long size = std::ftell(f);
        std::fseek(f, 0, SEEK_SET);
        data.resize(static_cast<std::size_t>(size));
        if (size > 0 && std::fread(data.data(), 1, data.size(), f) != data.size()) {
            std::fclose(f);
            throw StorageError("short read on journal " + path.string());
        }
        std::fclose(f);
    }

    std::size_t pos = 0;
    while (pos < data.size()) {
        if (data.size() - pos < 8) break;  // torn header
        std::uint32_t len = 0, crc = 0;
        for (int i = 0; i < 4; ++i) {
            len |= std::uint32_t{data[pos + static_cast<std::size_t>(i)]} << (8 * i);
            crc |= std::uint32_t{data[pos + static_cast<std::size_t>(4 + i)]} << (8 * i);
        }
        if (data.size() - pos - 8 < len) break;  // torn payload
        const std::uint8_t* payload = data.data() + pos + 8;
        if (crc32(payload, len) != crc)
            throw RecoveryError("journal entry #" +
                                std::to_string(entries.size()) + " at offset " +
                                std::to_string(pos) + " fails its checksum");
        entries.emplace_back(payload, payload + len);
        pos += 8 + len;
    }
    return entries;
}

}  // namespace fieldsync::syncq
