#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace adaptids {

/// IPv4 address in host byte order.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    static std::optional<Ipv4> parse(std::string_view text);
    std::string to_string() const;

    friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

/// IPv4 prefix such as 192.168.1.0/24.
struct Cidr {
    Ipv4 network;
    std::uint8_t prefix = 32;

    static std::optional<Cidr> parse(std::string_view text);
    bool contains(Ipv4 addr) const noexcept;
    std::string to_string() const;

    friend constexpr bool operator==(const Cidr&, const Cidr&) = default;
};

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;
inline constexpr std::uint16_t kMinIpv4Length = 20;

inline constexpr bool has_ports(std::uint8_t proto) noexcept {
    return proto == kProtoTcp || proto == kProtoUdp;
}

/// One normalized IPv4 packet observation (headers only).
struct PacketRecord {
    double ts = 0.0;
    Ipv4 src_addr;
    Ipv4 dst_addr;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t proto = 0;
    std::uint16_t length = kMinIpv4Length;
    std::uint8_t ttl = 0;

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Returns an empty string when the record satisfies the packet invariants,
/// otherwise a short description of the first violation.
std::string validate(const PacketRecord& p);

enum class Direction : std::uint8_t { Incoming, Outgoing };

/// Remote (internet-side) endpoint of a conversation.
struct HostKey {
    Ipv4 addr;
    friend constexpr auto operator<=>(const HostKey&, const HostKey&) = default;
};

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Direction dir) noexcept;

struct NetConfig {
    std::vector<Cidr> local_nets;
    std::set<Ipv4> honeypot_addrs;
    std::set<Ipv4> device_addrs;

    bool is_local(Ipv4 addr) const noexcept;
    /// Throws Error(InvalidConfig) when the honeypot and device sets overlap
    /// or either contains an address outside local_nets.
    void validate() const;
};

/// Half-open interval [start, end) in seconds.
struct TimeWindow {
    double start = 0.0;
    double end = 0.0;

    double duration() const noexcept { return end - start; }
    bool contains(double ts) const noexcept { return ts >= start && ts < end; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// nullopt when both or neither endpoint is local.
std::optional<Direction> direction_of(const PacketRecord& p, const NetConfig& cfg) noexcept;

inline HostKey remote_host(const PacketRecord& p, Direction dir) noexcept {
    return HostKey{dir == Direction::Incoming ? p.src_addr : p.dst_addr};
}

inline Ipv4 local_endpoint(const PacketRecord& p, Direction dir) noexcept {
    return dir == Direction::Incoming ? p.dst_addr : p.src_addr;
}

} // namespace adaptids
