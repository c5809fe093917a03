#include "adaptids/ingest.hpp"

#include <algorithm>

namespace adaptids {

std::optional<Label> HostLabelMap::label_of(HostKey host) const {
    auto it = entries.find(host);
    if (it == entries.end()) return std::nullopt;
    return it->second.label;
}

std::size_t HostLabelMap::count(Label label) const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                  [&](const auto& kv) { return kv.second.label == label; }));
}

namespace {

void note_contact(HostLabelMap& map, const PacketRecord& p, Direction dir, HostKey host, const NetConfig& cfg) {
    const Ipv4 local = local_endpoint(p, dir);
    const bool honeypot = cfg.honeypot_addrs.count(local) > 0;
    const bool device = cfg.device_addrs.count(local) > 0;
    if (!honeypot && !device) return;

    auto [it, inserted] = map.entries.try_emplace(host);
    HostContact& c = it->second;
    if (inserted) {
        c.first_seen = p.ts;
    } else {
        c.first_seen = std::min(c.first_seen, p.ts);
    }
    c.contacted_honeypot = c.contacted_honeypot || honeypot;
    c.contacted_device = c.contacted_device || device;
    c.label = c.contacted_honeypot ? Label::Malicious : Label::Benign;
}

} // namespace

HostLabelMap label_hosts(std::span<const PacketRecord> records, const NetConfig& cfg) {
    HostLabelMap map;
    for (const auto& p : records) {
        auto dir = direction_of(p, cfg);
        if (!dir) continue;
        note_contact(map, p, *dir, remote_host(p, *dir), cfg);
    }
    return map;
}

HostLabelMap label_hosts(std::span<const StoredPacket> records, const NetConfig& cfg) {
    HostLabelMap map;
    for (const auto& r : records) note_contact(map, r.packet, r.dir, r.host, cfg);
    return map;
}

bool TrafficStore::append(const PacketRecord& p, Direction dir, HostKey host) {
    if ((last_ts_ && p.ts < *last_ts_) || p.ts < horizon_) {
        ++rejected_;
        return false;
    }
    records_.push_back({p, dir, host});
    last_ts_ = p.ts;
    return true;
}

void TrafficStore::evict_before(double t) {
    if (t <= horizon_) return;
    horizon_ = t;
    auto first_kept = std::partition_point(records_.begin() + static_cast<std::ptrdiff_t>(head_), records_.end(),
                                           [t](const StoredPacket& r) { return r.packet.ts < t; });
    head_ = static_cast<std::size_t>(first_kept - records_.begin());
    // Compact once the dead prefix dominates so memory tracks the live window.
    if (head_ > 4096 && head_ * 2 > records_.size()) {
        records_.erase(records_.begin(), records_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
}

std::span<const StoredPacket> TrafficStore::records() const noexcept {
    return std::span<const StoredPacket>(records_).subspan(head_);
}

std::span<const StoredPacket> TrafficStore::slice(TimeWindow w) const {
    auto all = records();
    auto lo = std::partition_point(all.begin(), all.end(), [&](const StoredPacket& r) { return r.packet.ts < w.start; });
    auto hi = std::partition_point(lo, all.end(), [&](const StoredPacket& r) { return r.packet.ts < w.end; });
    return {lo, hi};
}

std::vector<StoredPacket> TrafficStore::snapshot(TimeWindow w) const {
    auto s = slice(w);
    return {s.begin(), s.end()};
}

} // namespace adaptids
