#pragma once

#include "adaptids/core.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace adaptids::pcap {

inline constexpr std::uint32_t kMagicMicros = 0xA1B2C3D4;
inline constexpr std::uint32_t kMagicNanos = 0xA1B23C4D;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

/// Converts a pcap (seconds, fraction) pair to float64 seconds. The writer
/// quantizes through the same function so a write/read cycle is exact.
double timestamp_from_parts(std::uint32_t seconds, std::uint32_t fraction, bool nanos) noexcept;

/// Rounds ts to the resolution of the given pcap flavor.
double quantize_timestamp(double ts, bool nanos) noexcept;

struct ReadStats {
    std::size_t frames = 0;
    std::size_t non_ipv4 = 0;   ///< ARP, IPv6, other ethertypes
    std::size_t truncated = 0;  ///< captured length shorter than the headers
    std::size_t invalid = 0;    ///< decoded but violating PacketRecord invariants
};

struct ReadResult {
    std::vector<PacketRecord> records;
    ReadStats stats;
    bool nanosecond = false;
    bool byte_swapped = false;
};

/// Reads a classic pcap file with Ethernet framing. Throws
/// Error(MalformedFile) on a bad magic, unsupported link type, or a
/// truncated file/record header.
ReadResult read_pcap(const std::filesystem::path& path);
ReadResult read_pcap(std::span<const std::byte> bytes);

struct WriterOptions {
    bool nanosecond = false;
    bool byte_swapped = false;  ///< write big-endian headers (magic reads back as 0xD4C3B2A1)
    std::uint32_t snaplen = 65535;
};

/// Minimal classic-pcap writer: one Ethernet/IPv4 frame per record with
/// synthesized L4 headers. Payload bytes are not captured (incl_len covers
/// headers only, orig_len reflects the IP total length).
class Writer {
public:
    explicit Writer(const std::filesystem::path& path, WriterOptions opts = {});

    void write(const PacketRecord& p);
    /// Writes an arbitrary Ethernet frame (used to emit non-IPv4 traffic).
    void write_raw(double ts, std::span<const std::byte> frame, std::uint32_t orig_len);

private:
    void put16(std::uint16_t v);
    void put32(std::uint32_t v);

    std::ofstream out_;
    WriterOptions opts_;
};

/// Encodes one record as an Ethernet frame (headers only).
std::vector<std::byte> encode_frame(const PacketRecord& p);

} // namespace adaptids::pcap
