#pragma once

#include "adaptids/core.hpp"
#include "adaptids/featurize.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace adaptids {

using GroundTruth = std::map<HostKey, Label>;

/// Remote servers that local devices talk to. Each host keeps one long-lived
/// connection: a fixed device and a fixed ephemeral client port.
struct BenignProfile {
    double mean_interval = 30.0;  ///< seconds between request/response exchanges
    std::uint16_t len_min = 400;  ///< response (incoming) lengths
    std::uint16_t len_max = 1500;
    std::uint16_t request_len_min = 100;  ///< request (outgoing) lengths
    std::uint16_t request_len_max = 600;
    std::vector<std::uint16_t> server_ports{443};
    std::uint8_t ttl_min = 44;
    std::uint8_t ttl_max = 56;
};

/// Internet scanners. Each probe hits the honeypot with probability
/// honeypot_share and a random device otherwise; the target answers.
struct MaliciousProfile {
    double mean_interval = 20.0;        ///< seconds between probe bursts
    double min_interval = 0.0;          ///< floor on the gap; the rest is exponential
    std::uint32_t burst = 1;            ///< attacker packets per probe
    std::vector<std::uint16_t> scan_ports{23};
    std::uint16_t len_min = 40;
    std::uint16_t len_max = 60;
    std::uint16_t reply_len_min = 40;
    std::uint16_t reply_len_max = 60;
    std::uint8_t ttl_min = 44;
    std::uint8_t ttl_max = 56;
    double honeypot_share = 0.5;
};

struct ScenarioConfig {
    double duration = 7200.0;
    std::size_t benign_hosts = 2;
    std::size_t malicious_hosts = 2;
    BenignProfile benign;
    MaliciousProfile malicious;
    std::optional<double> shift_at;  ///< malicious hosts switch to post_shift
    MaliciousProfile post_shift;
    std::uint64_t rng_seed = 1;
    NetConfig net = default_net();

    /// 192.168.1.0/24 with ten devices (.10-.19) and a honeypot at .200.
    static NetConfig default_net();
    /// Throws Error(InvalidScenario).
    void validate() const;
};

struct Scenario {
    std::vector<PacketRecord> packets;  ///< time-ordered, microsecond timestamps
    GroundTruth truth;
    NetConfig net;
    double duration = 0.0;
};

Scenario generate_synthetic(const ScenarioConfig& cfg);

/// Scanners send tiny packets to 23/TCP; servers answer with large packets
/// from 443/TCP. Every feature family separates the two roles.
ScenarioConfig separable_scenario(std::uint64_t seed, double duration = 6 * 3600.0, std::size_t hosts_per_class = 10);

/// 10 h with 12 hosts per class. At hour 5 the scanners switch to exploit
/// traffic on 52869/TCP with server-sized packets, a different TTL band, and
/// multi-packet bursts, so they look benign to a model that only saw the
/// first regime.
ScenarioConfig shift_scenario(std::uint64_t seed);

/// Directly sampled labeled feature rows (no packets) with overlapping class
/// distributions; used for training-time measurements at large row counts.
LabeledDataset synthetic_dataset(std::size_t rows, std::uint64_t seed);

} // namespace adaptids
