#pragma once

#include "adaptids/core.hpp"
#include "adaptids/ingest.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace adaptids {

inline constexpr std::size_t kFeatureCount = 9;

/// Canonical column order of every encoded feature vector.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "in_min_interval", "in_max_len",       "in_min_len", "in_proto",  "in_dst_port",
    "in_ttl",          "out_min_interval", "out_max_len", "out_min_len",
};

/// FNV-1a over the names, each terminated by a unit separator.
constexpr std::uint64_t schema_hash(std::span<const std::string_view> names) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto name : names) {
        for (char c : name) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ull;
        }
        h ^= 0x1Fu;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline constexpr std::uint64_t kSchemaHash = schema_hash(kFeatureNames);

struct HostWindowFeatures {
    HostKey host;
    TimeWindow window;
    double in_min_interval = 0.0;
    double in_max_len = 0.0;
    double in_min_len = 0.0;
    double in_proto = 0.0;
    double in_dst_port = 0.0;
    double in_ttl = 0.0;
    double out_min_interval = 0.0;
    double out_max_len = 0.0;
    double out_min_len = 0.0;
    std::size_t in_count = 0;
    std::size_t out_count = 0;

    friend bool operator==(const HostWindowFeatures&, const HostWindowFeatures&) = default;
};

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::uint64_t schema_hash = kSchemaHash;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Running per-host state for one window. Packets must arrive in
/// non-decreasing timestamp order.
class HostAccumulator {
public:
    void add(const PacketRecord& p, Direction dir);

    std::size_t in_count() const noexcept { return in_.count; }
    std::size_t out_count() const noexcept { return out_.count; }

    /// Applies the sentinel rules: fewer than two packets in a direction gives
    /// min interval = window duration; no packets gives zero lengths (and zero
    /// protocol/port/TTL for the incoming side).
    HostWindowFeatures finish(HostKey host, TimeWindow window) const;

private:
    struct Side {
        std::size_t count = 0;
        double last_ts = 0.0;
        double min_interval = std::numeric_limits<double>::infinity();
        std::uint16_t min_len = 0;
        std::uint16_t max_len = 0;

        void add(const PacketRecord& p);
    };

    Side in_;
    Side out_;
    std::array<std::uint32_t, 256> proto_counts_{};
    std::array<std::uint32_t, 256> ttl_counts_{};
    std::map<std::uint16_t, std::uint32_t> port_counts_;
};

struct HostTraffic {
    HostKey host;
    std::vector<PacketRecord> incoming;
    std::vector<PacketRecord> outgoing;
};

/// Computes the per-host feature set; input order does not matter. Throws
/// Error(EmptyHost) when both directions are empty.
HostWindowFeatures extract_features(const HostTraffic& traffic, TimeWindow window);

FeatureVector encode(const HostWindowFeatures& f);

struct DatasetRow {
    FeatureVector features;
    Label label = Label::Benign;
    HostKey host;
};

struct LabeledDataset {
    std::vector<DatasetRow> rows;  ///< ordered by host address
    TimeWindow window;

    std::size_t count(Label label) const;
    bool empty() const noexcept { return rows.empty(); }
};

/// One row per host that was active and labeled inside the window. Throws
/// Error(EmptyWindow) when no labeled host is active, and
/// Error(InvalidConfig) when the window starts before the store horizon.
LabeledDataset build_dataset(const TrafficStore& store, TimeWindow window, const NetConfig& cfg);

/// Same as above over an already-sliced, time-ordered packet span.
LabeledDataset build_dataset(std::span<const StoredPacket> packets, TimeWindow window, const NetConfig& cfg);

/// CSV with the feature names plus a trailing label column.
void write_dataset_csv(std::ostream& out, const LabeledDataset& ds);

} // namespace adaptids
