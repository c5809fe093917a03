#include "adaptids/pcap.hpp"

#include "adaptids/error.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace adaptids::pcap {

namespace {

constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::size_t kEthernetHeaderSize = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeVlan = 0x8100;

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

class ByteReader {
public:
    ByteReader(std::span<const std::byte> bytes, bool swapped) : bytes_(bytes), swapped_(swapped) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::to_integer<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return swapped_ ? bswap32(v) : v;
    }

    std::uint16_t u16() {
        std::uint16_t v = std::uint16_t(std::to_integer<std::uint8_t>(bytes_[pos_]) |
                                        (std::to_integer<std::uint8_t>(bytes_[pos_ + 1]) << 8));
        pos_ += 2;
        return swapped_ ? std::uint16_t((v >> 8) | (v << 8)) : v;
    }

    std::span<const std::byte> take(std::size_t n) {
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
    bool swapped_;
};

std::uint16_t be16(std::span<const std::byte> b, std::size_t off) {
    return std::uint16_t((std::to_integer<unsigned>(b[off]) << 8) | std::to_integer<unsigned>(b[off + 1]));
}

std::uint32_t be32(std::span<const std::byte> b, std::size_t off) {
    return (std::uint32_t(be16(b, off)) << 16) | be16(b, off + 2);
}

enum class FrameStatus { Ok, NonIpv4, Truncated, Invalid };

FrameStatus decode_frame(std::span<const std::byte> frame, double ts, PacketRecord& out) {
    if (frame.size() < kEthernetHeaderSize) return FrameStatus::Truncated;
    std::size_t off = 12;
    std::uint16_t ethertype = be16(frame, off);
    off += 2;
    if (ethertype == kEtherTypeVlan) {
        if (frame.size() < off + 4) return FrameStatus::Truncated;
        ethertype = be16(frame, off + 2);
        off += 4;
    }
    if (ethertype != kEtherTypeIpv4) return FrameStatus::NonIpv4;

    auto ip = frame.subspan(off);
    if (ip.size() < 20) return FrameStatus::Truncated;
    const unsigned version = std::to_integer<unsigned>(ip[0]) >> 4;
    const std::size_t ihl = (std::to_integer<unsigned>(ip[0]) & 0x0Fu) * 4;
    if (version != 4 || ihl < 20) return FrameStatus::Invalid;
    if (ip.size() < ihl) return FrameStatus::Truncated;

    out = PacketRecord{};
    out.ts = ts;
    out.length = be16(ip, 2);
    const std::uint16_t frag_offset = be16(ip, 6) & 0x1FFFu;
    out.ttl = std::to_integer<std::uint8_t>(ip[8]);
    out.proto = std::to_integer<std::uint8_t>(ip[9]);
    out.src_addr = Ipv4{be32(ip, 12)};
    out.dst_addr = Ipv4{be32(ip, 16)};

    if (has_ports(out.proto) && frag_offset == 0) {
        if (ip.size() < ihl + 4) return FrameStatus::Truncated;
        out.src_port = be16(ip, ihl);
        out.dst_port = be16(ip, ihl + 2);
    }
    if (!validate(out).empty()) return FrameStatus::Invalid;
    return FrameStatus::Ok;
}

void put_be16(std::vector<std::byte>& b, std::uint16_t v) {
    b.push_back(std::byte(v >> 8));
    b.push_back(std::byte(v & 0xFF));
}

void put_be32(std::vector<std::byte>& b, std::uint32_t v) {
    put_be16(b, std::uint16_t(v >> 16));
    put_be16(b, std::uint16_t(v & 0xFFFF));
}

std::uint16_t ipv4_checksum(std::span<const std::byte> header) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < header.size(); i += 2) sum += be16(header, i);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return std::uint16_t(~sum);
}

} // namespace

double timestamp_from_parts(std::uint32_t seconds, std::uint32_t fraction, bool nanos) noexcept {
    return static_cast<double>(seconds) + static_cast<double>(fraction) * (nanos ? 1e-9 : 1e-6);
}

double quantize_timestamp(double ts, bool nanos) noexcept {
    const double scale = nanos ? 1e9 : 1e6;
    double whole = std::floor(ts);
    auto frac = static_cast<std::uint32_t>(std::llround((ts - whole) * scale));
    if (frac >= static_cast<std::uint32_t>(scale)) {
        whole += 1.0;
        frac = 0;
    }
    return timestamp_from_parts(static_cast<std::uint32_t>(whole), frac, nanos);
}

ReadResult read_pcap(std::span<const std::byte> bytes) {
    if (bytes.size() < kGlobalHeaderSize) throw Error(ErrorCode::MalformedFile, "truncated pcap global header");

    ReadResult result;
    ByteReader probe(bytes, false);
    const std::uint32_t magic = probe.u32();
    if (magic == kMagicMicros || magic == kMagicNanos) {
        result.byte_swapped = false;
    } else if (magic == bswap32(kMagicMicros) || magic == bswap32(kMagicNanos)) {
        result.byte_swapped = true;
    } else {
        throw Error(ErrorCode::MalformedFile, "bad pcap magic");
    }
    result.nanosecond = magic == kMagicNanos || magic == bswap32(kMagicNanos);

    ByteReader in(bytes, result.byte_swapped);
    in.u32();  // magic
    in.u16();  // version major
    in.u16();  // version minor
    in.u32();  // thiszone
    in.u32();  // sigfigs
    in.u32();  // snaplen
    const std::uint32_t linktype = in.u32() & 0x0FFFFFFFu;
    if (linktype != kLinkTypeEthernet)
        throw Error(ErrorCode::MalformedFile, "unsupported link type " + std::to_string(linktype));

    while (in.remaining() > 0) {
        if (in.remaining() < kRecordHeaderSize) throw Error(ErrorCode::MalformedFile, "truncated record header");
        const std::uint32_t sec = in.u32();
        const std::uint32_t frac = in.u32();
        const std::uint32_t incl_len = in.u32();
        in.u32();  // orig_len
        if (incl_len > in.remaining()) throw Error(ErrorCode::MalformedFile, "record extends past end of file");
        auto frame = in.take(incl_len);
        ++result.stats.frames;

        PacketRecord rec;
        switch (decode_frame(frame, timestamp_from_parts(sec, frac, result.nanosecond), rec)) {
        case FrameStatus::Ok: result.records.push_back(rec); break;
        case FrameStatus::NonIpv4: ++result.stats.non_ipv4; break;
        case FrameStatus::Truncated: ++result.stats.truncated; break;
        case FrameStatus::Invalid: ++result.stats.invalid; break;
        }
    }
    return result;
}

ReadResult read_pcap(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_pcap(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> encode_frame(const PacketRecord& p) {
    std::vector<std::byte> f;
    f.reserve(kEthernetHeaderSize + 40);
    const std::uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
    const std::uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
    for (auto b : dst_mac) f.push_back(std::byte(b));
    for (auto b : src_mac) f.push_back(std::byte(b));
    put_be16(f, kEtherTypeIpv4);

    const std::size_t ip_start = f.size();
    f.push_back(std::byte(0x45));
    f.push_back(std::byte(0));
    put_be16(f, p.length);
    put_be16(f, 0);       // identification
    put_be16(f, 0x4000);  // DF, offset 0
    f.push_back(std::byte(p.ttl));
    f.push_back(std::byte(p.proto));
    put_be16(f, 0);  // checksum placeholder
    put_be32(f, p.src_addr.value);
    put_be32(f, p.dst_addr.value);
    const std::uint16_t csum = ipv4_checksum(std::span(f).subspan(ip_start, 20));
    f[ip_start + 10] = std::byte(csum >> 8);
    f[ip_start + 11] = std::byte(csum & 0xFF);

    switch (p.proto) {
    case kProtoTcp:
        put_be16(f, p.src_port);
        put_be16(f, p.dst_port);
        put_be32(f, 0);  // seq
        put_be32(f, 0);  // ack
        f.push_back(std::byte(0x50));
        f.push_back(std::byte(0x02));  // SYN
        put_be16(f, 64240);
        put_be16(f, 0);
        put_be16(f, 0);
        break;
    case kProtoUdp:
        put_be16(f, p.src_port);
        put_be16(f, p.dst_port);
        put_be16(f, std::uint16_t(std::max<int>(8, p.length - 20)));
        put_be16(f, 0);
        break;
    case kProtoIcmp:
        f.push_back(std::byte(8));
        f.push_back(std::byte(0));
        put_be16(f, 0);
        put_be32(f, 0);
        break;
    default:
        break;
    }
    return f;
}

Writer::Writer(const std::filesystem::path& path, WriterOptions opts)
    : out_(path, std::ios::binary | std::ios::trunc), opts_(opts) {
    if (!out_) throw Error(ErrorCode::IoError, "cannot create " + path.string());
    put32(opts_.nanosecond ? kMagicNanos : kMagicMicros);
    put16(2);
    put16(4);
    put32(0);
    put32(0);
    put32(opts_.snaplen);
    put32(kLinkTypeEthernet);
}

void Writer::put16(std::uint16_t v) {
    char b[2];
    if (opts_.byte_swapped) {
        b[0] = char(v >> 8);
        b[1] = char(v & 0xFF);
    } else {
        b[0] = char(v & 0xFF);
        b[1] = char(v >> 8);
    }
    out_.write(b, 2);
}

void Writer::put32(std::uint32_t v) {
    if (opts_.byte_swapped) {
        put16(std::uint16_t(v >> 16));
        put16(std::uint16_t(v & 0xFFFF));
    } else {
        put16(std::uint16_t(v & 0xFFFF));
        put16(std::uint16_t(v >> 16));
    }
}

void Writer::write_raw(double ts, std::span<const std::byte> frame, std::uint32_t orig_len) {
    const double scale = opts_.nanosecond ? 1e9 : 1e6;
    double whole = std::floor(ts);
    auto frac = static_cast<std::uint32_t>(std::llround((ts - whole) * scale));
    if (frac >= static_cast<std::uint32_t>(scale)) {
        whole += 1.0;
        frac = 0;
    }
    const auto incl = static_cast<std::uint32_t>(std::min<std::size_t>(frame.size(), opts_.snaplen));
    put32(static_cast<std::uint32_t>(whole));
    put32(frac);
    put32(incl);
    put32(std::max(orig_len, incl));
    out_.write(reinterpret_cast<const char*>(frame.data()), incl);
    if (!out_) throw Error(ErrorCode::IoError, "pcap write failed");
}

void Writer::write(const PacketRecord& p) {
    auto frame = encode_frame(p);
    write_raw(p.ts, frame, static_cast<std::uint32_t>(kEthernetHeaderSize + p.length));
}

} // namespace adaptids::pcap
