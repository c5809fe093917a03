#include "adaptids/featurize.hpp"

#include "adaptids/error.hpp"
#include "adaptids/format.hpp"

#include <algorithm>
#include <ostream>

namespace adaptids {

namespace {

// Mode with ties resolved toward the smallest value.
template <typename Counts>
double mode_of(const Counts& counts) {
    std::size_t best_value = 0;
    std::uint32_t best_count = 0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (counts[v] > best_count) {
            best_count = counts[v];
            best_value = v;
        }
    }
    return static_cast<double>(best_value);
}

} // namespace

void HostAccumulator::Side::add(const PacketRecord& p) {
    if (count == 0) {
        min_len = max_len = p.length;
    } else {
        min_interval = std::min(min_interval, p.ts - last_ts);
        min_len = std::min(min_len, p.length);
        max_len = std::max(max_len, p.length);
    }
    last_ts = p.ts;
    ++count;
}

void HostAccumulator::add(const PacketRecord& p, Direction dir) {
    if (dir == Direction::Incoming) {
        in_.add(p);
        ++proto_counts_[p.proto];
        ++ttl_counts_[p.ttl];
        ++port_counts_[p.dst_port];
    } else {
        out_.add(p);
    }
}

HostWindowFeatures HostAccumulator::finish(HostKey host, TimeWindow window) const {
    HostWindowFeatures f;
    f.host = host;
    f.window = window;
    f.in_count = in_.count;
    f.out_count = out_.count;

    const double duration = window.duration();
    f.in_min_interval = in_.count >= 2 ? in_.min_interval : duration;
    f.out_min_interval = out_.count >= 2 ? out_.min_interval : duration;
    f.in_max_len = in_.max_len;
    f.in_min_len = in_.min_len;
    f.out_max_len = out_.max_len;
    f.out_min_len = out_.min_len;

    if (in_.count > 0) {
        f.in_proto = mode_of(proto_counts_);
        f.in_ttl = mode_of(ttl_counts_);
        std::uint32_t best = 0;
        for (const auto& [port, n] : port_counts_) {
            if (n > best) {
                best = n;
                f.in_dst_port = port;
            }
        }
    }
    return f;
}

HostWindowFeatures extract_features(const HostTraffic& traffic, TimeWindow window) {
    if (traffic.incoming.empty() && traffic.outgoing.empty())
        throw Error(ErrorCode::EmptyHost, "host " + traffic.host.addr.to_string() + " has no packets");

    auto by_ts = [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; };
    auto incoming = traffic.incoming;
    auto outgoing = traffic.outgoing;
    std::stable_sort(incoming.begin(), incoming.end(), by_ts);
    std::stable_sort(outgoing.begin(), outgoing.end(), by_ts);

    HostAccumulator acc;
    for (const auto& p : incoming) acc.add(p, Direction::Incoming);
    for (const auto& p : outgoing) acc.add(p, Direction::Outgoing);
    return acc.finish(traffic.host, window);
}

FeatureVector encode(const HostWindowFeatures& f) {
    FeatureVector v;
    v.values = {f.in_min_interval, f.in_max_len, f.in_min_len, f.in_proto,    f.in_dst_port,
                f.in_ttl,          f.out_min_interval, f.out_max_len, f.out_min_len};
    v.schema_hash = kSchemaHash;
    return v;
}

std::size_t LabeledDataset::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](const DatasetRow& r) { return r.label == label; }));
}

LabeledDataset build_dataset(std::span<const StoredPacket> packets, TimeWindow window, const NetConfig& cfg) {
    std::map<HostKey, HostAccumulator> hosts;
    std::vector<StoredPacket> in_window;
    for (const auto& r : packets) {
        if (!window.contains(r.packet.ts)) continue;
        hosts[r.host].add(r.packet, r.dir);
        in_window.push_back(r);
    }
    const HostLabelMap labels = label_hosts(std::span<const StoredPacket>(in_window), cfg);

    LabeledDataset ds;
    ds.window = window;
    for (const auto& [host, acc] : hosts) {
        auto label = labels.label_of(host);
        if (!label) continue;
        ds.rows.push_back({encode(acc.finish(host, window)), *label, host});
    }
    if (ds.rows.empty()) throw Error(ErrorCode::EmptyWindow, "no labeled hosts in window");
    return ds;
}

LabeledDataset build_dataset(const TrafficStore& store, TimeWindow window, const NetConfig& cfg) {
    if (window.start < store.horizon())
        throw Error(ErrorCode::InvalidConfig, "window starts before the store horizon");
    return build_dataset(store.slice(window), window, cfg);
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& ds) {
    for (auto name : kFeatureNames) out << name << ',';
    out << "label\n";
    for (const auto& row : ds.rows) {
        for (double v : row.features.values) out << format_double(v) << ',';
        out << to_string(row.label) << '\n';
    }
}

} // namespace adaptids
