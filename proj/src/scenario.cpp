#include "adaptids/scenario.hpp"

#include "adaptids/error.hpp"
#include "adaptids/pcap.hpp"
#include "adaptids/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adaptids {

namespace {

constexpr std::uint16_t kEphemeralMin = 32768;
constexpr std::uint16_t kEphemeralMax = 60999;
constexpr std::uint8_t kLocalTtl = 64;

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
    return lo + uniform_index(rng, hi - lo + 1);
}

double exponential(std::mt19937_64& rng, double mean) {
    return -mean * std::log1p(-uniform01(rng));
}

// Small gap between packets of one exchange, 1-50 ms.
double jitter(std::mt19937_64& rng) {
    return 0.001 + 0.049 * uniform01(rng);
}

std::mt19937_64 host_rng(std::uint64_t seed, std::uint64_t role, std::uint64_t index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64((role << 32) | index)));
}

Ipv4 benign_addr(std::size_t i) {
    return Ipv4(52, 10, static_cast<std::uint8_t>(i / 250), static_cast<std::uint8_t>(i % 250 + 1));
}

Ipv4 malicious_addr(std::size_t i) {
    return Ipv4(185, 20, static_cast<std::uint8_t>(i / 250), static_cast<std::uint8_t>(i % 250 + 1));
}

void check_profile(const MaliciousProfile& m, const char* which) {
    const std::string name(which);
    if (!(m.mean_interval > 0.0) || !std::isfinite(m.mean_interval))
        throw Error(ErrorCode::InvalidScenario, name + " mean_interval must be positive");
    if (!(m.min_interval >= 0.0 && m.min_interval < m.mean_interval))
        throw Error(ErrorCode::InvalidScenario, name + " min_interval must lie in [0, mean_interval)");
    if (m.burst == 0) throw Error(ErrorCode::InvalidScenario, name + " burst must be positive");
    if (m.scan_ports.empty()) throw Error(ErrorCode::InvalidScenario, name + " needs at least one scan port");
    if (m.len_min < kMinIpv4Length || m.len_min > m.len_max || m.reply_len_min < kMinIpv4Length ||
        m.reply_len_min > m.reply_len_max)
        throw Error(ErrorCode::InvalidScenario, name + " length range is invalid");
    if (m.ttl_min == 0 || m.ttl_min > m.ttl_max) throw Error(ErrorCode::InvalidScenario, name + " TTL range is invalid");
    if (!(m.honeypot_share >= 0.0 && m.honeypot_share <= 1.0))
        throw Error(ErrorCode::InvalidScenario, name + " honeypot_share must lie in [0, 1]");
}

PacketRecord make(double ts, Ipv4 src, Ipv4 dst, std::uint16_t sport, std::uint16_t dport, std::uint16_t len,
                  std::uint8_t ttl) {
    PacketRecord p;
    p.ts = pcap::quantize_timestamp(ts, false);
    p.src_addr = src;
    p.dst_addr = dst;
    p.src_port = sport;
    p.dst_port = dport;
    p.proto = kProtoTcp;
    p.length = len;
    p.ttl = ttl;
    return p;
}

} // namespace

NetConfig ScenarioConfig::default_net() {
    NetConfig cfg;
    cfg.local_nets.push_back(*Cidr::parse("192.168.1.0/24"));
    cfg.honeypot_addrs.insert(Ipv4(192, 168, 1, 200));
    for (std::uint8_t d = 10; d < 20; ++d) cfg.device_addrs.insert(Ipv4(192, 168, 1, d));
    return cfg;
}

void ScenarioConfig::validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw Error(ErrorCode::InvalidScenario, "duration must be positive");
    if (benign_hosts + malicious_hosts == 0) throw Error(ErrorCode::InvalidScenario, "scenario has no hosts");
    if (benign_hosts > 250 * 256 || malicious_hosts > 250 * 256)
        throw Error(ErrorCode::InvalidScenario, "too many hosts");
    if (shift_at && !(*shift_at >= 0.0 && *shift_at < duration))
        throw Error(ErrorCode::InvalidScenario, "shift_at must lie in [0, duration)");
    const BenignProfile& b = benign;
    if (!(b.mean_interval > 0.0) || !std::isfinite(b.mean_interval))
        throw Error(ErrorCode::InvalidScenario, "benign mean_interval must be positive");
    if (b.len_min < kMinIpv4Length || b.len_min > b.len_max || b.request_len_min < kMinIpv4Length ||
        b.request_len_min > b.request_len_max)
        throw Error(ErrorCode::InvalidScenario, "benign length range is invalid");
    if (b.server_ports.empty()) throw Error(ErrorCode::InvalidScenario, "benign needs at least one server port");
    if (b.ttl_min == 0 || b.ttl_min > b.ttl_max) throw Error(ErrorCode::InvalidScenario, "benign TTL range is invalid");
    check_profile(malicious, "malicious");
    if (shift_at) check_profile(post_shift, "post-shift");
    if (net.device_addrs.empty()) throw Error(ErrorCode::InvalidScenario, "scenario needs at least one device");
    if (malicious_hosts > 0 && net.honeypot_addrs.empty() && malicious.honeypot_share > 0.0)
        throw Error(ErrorCode::InvalidScenario, "scenario needs a honeypot");
    try {
        net.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidScenario, e.what());
    }
}

Scenario generate_synthetic(const ScenarioConfig& cfg) {
    cfg.validate();
    Scenario out;
    out.net = cfg.net;
    out.duration = cfg.duration;

    const std::vector<Ipv4> devices(cfg.net.device_addrs.begin(), cfg.net.device_addrs.end());
    const std::vector<Ipv4> honeypots(cfg.net.honeypot_addrs.begin(), cfg.net.honeypot_addrs.end());
    auto& pkts = out.packets;
    auto emit = [&](const PacketRecord& p) {
        if (p.ts < cfg.duration) pkts.push_back(p);
    };

    for (std::size_t i = 0; i < cfg.benign_hosts; ++i) {
        const BenignProfile& b = cfg.benign;
        auto rng = host_rng(cfg.rng_seed, 1, i);
        const Ipv4 remote = benign_addr(i);
        const Ipv4 device = devices[uniform_index(rng, devices.size())];
        const auto client_port = static_cast<std::uint16_t>(pick(rng, kEphemeralMin, kEphemeralMax));
        const auto server_port = b.server_ports[uniform_index(rng, b.server_ports.size())];
        const auto ttl = static_cast<std::uint8_t>(pick(rng, b.ttl_min, b.ttl_max));
        out.truth[HostKey{remote}] = Label::Benign;

        double t = uniform01(rng) * b.mean_interval;
        while (t < cfg.duration) {
            emit(make(t, device, remote, client_port, server_port,
                      static_cast<std::uint16_t>(pick(rng, b.request_len_min, b.request_len_max)), kLocalTtl));
            double r = t;
            const auto responses = pick(rng, 1, 3);
            for (std::uint64_t k = 0; k < responses; ++k) {
                r += jitter(rng);
                emit(make(r, remote, device, server_port, client_port,
                          static_cast<std::uint16_t>(pick(rng, b.len_min, b.len_max)), ttl));
            }
            t += exponential(rng, b.mean_interval);
        }
    }

    for (std::size_t i = 0; i < cfg.malicious_hosts; ++i) {
        auto rng = host_rng(cfg.rng_seed, 2, i);
        const Ipv4 remote = malicious_addr(i);
        const auto ttl_before = static_cast<std::uint8_t>(pick(rng, cfg.malicious.ttl_min, cfg.malicious.ttl_max));
        const auto ttl_after = static_cast<std::uint8_t>(pick(rng, cfg.post_shift.ttl_min, cfg.post_shift.ttl_max));
        out.truth[HostKey{remote}] = Label::Malicious;

        double t = uniform01(rng) * cfg.malicious.mean_interval;
        while (t < cfg.duration) {
            const bool shifted = cfg.shift_at && t >= *cfg.shift_at;
            const MaliciousProfile& m = shifted ? cfg.post_shift : cfg.malicious;
            const std::uint8_t ttl = shifted ? ttl_after : ttl_before;
            const bool to_honeypot = !honeypots.empty() && uniform01(rng) < m.honeypot_share;
            const Ipv4 target =
                to_honeypot ? honeypots[uniform_index(rng, honeypots.size())] : devices[uniform_index(rng, devices.size())];
            const auto sport = static_cast<std::uint16_t>(pick(rng, 1024, 65535));
            const auto dport = m.scan_ports[uniform_index(rng, m.scan_ports.size())];
            double s = t;
            for (std::uint32_t k = 0; k < m.burst; ++k) {
                if (k > 0) s += jitter(rng);
                emit(make(s, remote, target, sport, dport, static_cast<std::uint16_t>(pick(rng, m.len_min, m.len_max)),
                          ttl));
            }
            emit(make(s + jitter(rng), target, remote, dport, sport,
                      static_cast<std::uint16_t>(pick(rng, m.reply_len_min, m.reply_len_max)), kLocalTtl));
            t += m.min_interval + exponential(rng, m.mean_interval - m.min_interval);
        }
    }

    std::stable_sort(pkts.begin(), pkts.end(), [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
    return out;
}

ScenarioConfig separable_scenario(std::uint64_t seed, double duration, std::size_t hosts_per_class) {
    ScenarioConfig cfg;
    cfg.duration = duration;
    cfg.benign_hosts = hosts_per_class;
    cfg.malicious_hosts = hosts_per_class;
    cfg.rng_seed = seed;
    cfg.malicious.min_interval = 5.0;
    return cfg;
}

ScenarioConfig shift_scenario(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.duration = 10 * 3600.0;
    cfg.benign_hosts = 12;
    cfg.malicious_hosts = 12;
    cfg.rng_seed = seed;
    cfg.shift_at = 5 * 3600.0;
    cfg.malicious.min_interval = 5.0;
    MaliciousProfile& post = cfg.post_shift;
    post.mean_interval = 30.0;
    post.burst = 3;
    post.scan_ports = {52869};
    post.len_min = 400;
    post.len_max = 1500;
    post.reply_len_min = 100;
    post.reply_len_max = 600;
    post.ttl_min = 230;
    post.ttl_max = 250;
    return cfg;
}

LabeledDataset synthetic_dataset(std::size_t rows, std::uint64_t seed) {
    static constexpr std::uint16_t kScanPorts[] = {23, 2323, 80, 8080, 5555, 7547, 52869, 37215};
    std::mt19937_64 rng(splitmix64(seed));
    LabeledDataset ds;
    ds.window = TimeWindow{0.0, 3600.0};
    ds.rows.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        DatasetRow row;
        row.host = HostKey{Ipv4(static_cast<std::uint32_t>(0x0A000000u + i))};
        const bool malicious = uniform01(rng) < 0.5;
        auto& v = row.features.values;
        if (malicious) {
            v[0] = exponential(rng, 0.5);
            v[1] = static_cast<double>(pick(rng, 40, 800));
            v[2] = static_cast<double>(pick(rng, 40, 100));
            v[3] = kProtoTcp;
            v[4] = uniform01(rng) < 0.7 ? kScanPorts[uniform_index(rng, std::size(kScanPorts))]
                                        : static_cast<double>(pick(rng, 1, 65535));
            v[5] = static_cast<double>(pick(rng, 30, 250));
            v[6] = exponential(rng, 2.0);
            v[7] = static_cast<double>(pick(rng, 40, 400));
            v[8] = static_cast<double>(pick(rng, 40, 80));
        } else {
            v[0] = exponential(rng, 0.05);
            v[1] = static_cast<double>(pick(rng, 300, 1500));
            v[2] = static_cast<double>(pick(rng, 40, 400));
            v[3] = uniform01(rng) < 0.8 ? kProtoTcp : kProtoUdp;
            v[4] = uniform01(rng) < 0.3 ? 443.0 : static_cast<double>(pick(rng, kEphemeralMin, kEphemeralMax));
            v[5] = static_cast<double>(pick(rng, 40, 64));
            v[6] = exponential(rng, 1.0);
            v[7] = static_cast<double>(pick(rng, 100, 1500));
            v[8] = static_cast<double>(pick(rng, 40, 200));
        }
        // Label noise keeps the trees from collapsing to a handful of nodes.
        const bool flip = uniform01(rng) < 0.05;
        row.label = (malicious != flip) ? Label::Malicious : Label::Benign;
        ds.rows.push_back(row);
    }
    return ds;
}

} // namespace adaptids
