#pragma once

#include "adaptids/core.hpp"
#include "adaptids/error.hpp"
#include "adaptids/featurize.hpp"
#include "adaptids/random.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testing {

using namespace adaptids;

inline Ipv4 ip(const char* text) {
    return *Ipv4::parse(text);
}

inline NetConfig home_net() {
    NetConfig cfg;
    cfg.local_nets.push_back(*Cidr::parse("192.168.1.0/24"));
    cfg.honeypot_addrs.insert(ip("192.168.1.200"));
    cfg.device_addrs.insert(ip("192.168.1.10"));
    cfg.device_addrs.insert(ip("192.168.1.20"));
    return cfg;
}

inline PacketRecord pkt(double ts, const char* src, const char* dst, std::uint16_t sport = 1234,
                        std::uint16_t dport = 80, std::uint16_t len = 60, std::uint8_t ttl = 64,
                        std::uint8_t proto = kProtoTcp) {
    PacketRecord p;
    p.ts = ts;
    p.src_addr = ip(src);
    p.dst_addr = ip(dst);
    p.src_port = sport;
    p.dst_port = dport;
    p.proto = proto;
    p.length = len;
    p.ttl = ttl;
    return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("adaptids-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Random valid record; remote side drawn from a small pool so hosts repeat.
inline PacketRecord random_packet(std::mt19937_64& rng, double ts, const NetConfig& cfg) {
    static const char* remotes[] = {"8.8.8.8", "1.2.3.4", "5.5.5.5", "6.6.6.6", "7.7.7.7", "203.0.113.9"};
    std::vector<Ipv4> locals(cfg.device_addrs.begin(), cfg.device_addrs.end());
    locals.insert(locals.end(), cfg.honeypot_addrs.begin(), cfg.honeypot_addrs.end());
    locals.push_back(ip("192.168.1.99"));
    const Ipv4 remote = ip(remotes[uniform_index(rng, std::size(remotes))]);
    const Ipv4 local = locals[uniform_index(rng, locals.size())];
    PacketRecord p;
    p.ts = ts;
    const bool incoming = uniform01(rng) < 0.6;
    p.src_addr = incoming ? remote : local;
    p.dst_addr = incoming ? local : remote;
    static const std::uint8_t protos[] = {kProtoTcp, kProtoUdp, kProtoIcmp};
    p.proto = protos[uniform_index(rng, 3)];
    if (has_ports(p.proto)) {
        p.src_port = static_cast<std::uint16_t>(uniform_index(rng, 6) * 1000 + 23);
        p.dst_port = static_cast<std::uint16_t>(uniform_index(rng, 4) * 20 + 23);
    }
    p.length = static_cast<std::uint16_t>(20 + uniform_index(rng, 1481));
    p.ttl = static_cast<std::uint8_t>(30 + uniform_index(rng, 8));
    return p;
}

} // namespace testing
