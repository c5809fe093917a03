#pragma once

#include "adaptids/core.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace adaptids {

/// Ground-truth contact summary for one remote host.
struct HostContact {
    Label label = Label::Benign;
    bool contacted_honeypot = false;
    bool contacted_device = false;
    double first_seen = 0.0;

    friend bool operator==(const HostContact&, const HostContact&) = default;
};

struct HostLabelMap {
    std::map<HostKey, HostContact> entries;

    std::optional<Label> label_of(HostKey host) const;
    std::size_t count(Label label) const;

    friend bool operator==(const HostLabelMap&, const HostLabelMap&) = default;
};

/// One packet as held by the store: direction and remote host are resolved
/// once at append time.
struct StoredPacket {
    PacketRecord packet;
    Direction dir = Direction::Incoming;
    HostKey host;
};

/// Labels remote hosts by who they talked to: any exchange with a honeypot
/// address makes a host Malicious (even if it also reached a device); hosts
/// that only exchanged packets with devices are Benign; everything else is
/// left out of the map.
HostLabelMap label_hosts(std::span<const PacketRecord> records, const NetConfig& cfg);
HostLabelMap label_hosts(std::span<const StoredPacket> records, const NetConfig& cfg);

/// Time-ordered packet buffer with front eviction. Not internally
/// synchronized: the replay driver is the single writer and reads happen
/// between mutations.
class TrafficStore {
public:
    /// Returns false (and counts the rejection) when ts precedes the last
    /// appended timestamp or the eviction horizon.
    bool append(const PacketRecord& p, Direction dir, HostKey host);

    /// Drops every record with ts < t. Calls with t below the current horizon
    /// are no-ops.
    void evict_before(double t);

    std::span<const StoredPacket> records() const noexcept;
    /// Records with ts in [w.start, w.end); the view is invalidated by the next
    /// append or eviction.
    std::span<const StoredPacket> slice(TimeWindow w) const;
    std::vector<StoredPacket> snapshot(TimeWindow w) const;

    double horizon() const noexcept { return horizon_; }
    std::size_t size() const noexcept { return records_.size() - head_; }
    std::size_t rejected() const noexcept { return rejected_; }

private:
    std::vector<StoredPacket> records_;
    std::size_t head_ = 0;
    double horizon_ = 0.0;
    std::optional<double> last_ts_;
    std::size_t rejected_ = 0;
};

} // namespace adaptids
