#include "adaptids/core.hpp"

#include "adaptids/error.hpp"

#include <charconv>
#include <cmath>

namespace adaptids {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::OutOfOrderTimestamp: return "OutOfOrderTimestamp";
    case ErrorCode::EmptyHost: return "EmptyHost";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::ChannelUnavailable: return "ChannelUnavailable";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::uint32_t value = 0;
    const char* it = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (it == end || *it != '.') return std::nullopt;
            ++it;
        }
        if (it == end || *it < '0' || *it > '9') return std::nullopt;
        unsigned part = 0;
        auto [next, ec] = std::from_chars(it, end, part);
        if (ec != std::errc{} || part > 255 || next - it > 3) return std::nullopt;
        value = (value << 8) | part;
        it = next;
    }
    if (it != end) return std::nullopt;
    return Ipv4{value};
}

std::string Ipv4::to_string() const {
    std::string out;
    out.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
        out += std::to_string((value >> shift) & 0xFFu);
        if (shift > 0) out += '.';
    }
    return out;
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
    auto slash = text.find('/');
    auto addr = Ipv4::parse(text.substr(0, slash));
    if (!addr) return std::nullopt;
    unsigned prefix = 32;
    if (slash != std::string_view::npos) {
        auto bits = text.substr(slash + 1);
        auto [next, ec] = std::from_chars(bits.data(), bits.data() + bits.size(), prefix);
        if (ec != std::errc{} || next != bits.data() + bits.size() || prefix > 32 || bits.empty())
            return std::nullopt;
    }
    Cidr c;
    c.prefix = static_cast<std::uint8_t>(prefix);
    std::uint32_t mask = prefix == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix);
    c.network = Ipv4{addr->value & mask};
    return c;
}

bool Cidr::contains(Ipv4 addr) const noexcept {
    std::uint32_t mask = prefix == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix);
    return (addr.value & mask) == network.value;
}

std::string Cidr::to_string() const {
    return network.to_string() + "/" + std::to_string(prefix);
}

std::string validate(const PacketRecord& p) {
    if (!std::isfinite(p.ts) || p.ts < 0.0) return "timestamp must be finite and non-negative";
    if (p.length < kMinIpv4Length) return "length below minimum IPv4 header size";
    if (!has_ports(p.proto) && (p.src_port != 0 || p.dst_port != 0))
        return "ports must be zero for protocols other than TCP/UDP";
    return {};
}

std::string_view to_string(Label label) noexcept {
    return label == Label::Malicious ? "malicious" : "benign";
}

std::string_view to_string(Direction dir) noexcept {
    return dir == Direction::Incoming ? "incoming" : "outgoing";
}

bool NetConfig::is_local(Ipv4 addr) const noexcept {
    for (const auto& net : local_nets) {
        if (net.contains(addr)) return true;
    }
    return false;
}

void NetConfig::validate() const {
    for (auto addr : honeypot_addrs) {
        if (device_addrs.count(addr))
            throw Error(ErrorCode::InvalidConfig, addr.to_string() + " is both honeypot and device");
        if (!is_local(addr))
            throw Error(ErrorCode::InvalidConfig, "honeypot " + addr.to_string() + " outside local networks");
    }
    for (auto addr : device_addrs) {
        if (!is_local(addr))
            throw Error(ErrorCode::InvalidConfig, "device " + addr.to_string() + " outside local networks");
    }
}

std::optional<Direction> direction_of(const PacketRecord& p, const NetConfig& cfg) noexcept {
    const bool src_local = cfg.is_local(p.src_addr);
    const bool dst_local = cfg.is_local(p.dst_addr);
    if (src_local == dst_local) return std::nullopt;
    return dst_local ? Direction::Incoming : Direction::Outgoing;
}

} // namespace adaptids
