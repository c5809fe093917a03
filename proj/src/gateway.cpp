#include "adaptids/gateway.hpp"

#include "adaptids/error.hpp"
#include "adaptids/format.hpp"

#include <algorithm>
#include <ostream>

namespace adaptids {

void MaliciousList::flag(Ipv4 addr, double t) {
    auto [it, inserted] = entries_.try_emplace(addr);
    ListEntry& e = it->second;
    if (inserted) e.first_flagged = t;
    e.last_flagged = std::max(e.last_flagged, t);
    ++e.flag_count;
}

const ListEntry* MaliciousList::find(Ipv4 addr) const {
    auto it = entries_.find(addr);
    return it == entries_.end() ? nullptr : &it->second;
}

void MaliciousList::write_csv(std::ostream& out) const {
    out << "addr,first_flagged,last_flagged,flag_count\n";
    for (const auto& [addr, e] : entries_) {
        out << addr.to_string() << ',' << format_double(e.first_flagged) << ',' << format_double(e.last_flagged)
            << ',' << e.flag_count << '\n';
    }
}

Verdict apply_policy(const PacketRecord& p, const MaliciousList& list, HandlingPolicy policy) noexcept {
    // Local addresses are never listed, so checking both ends finds the remote one.
    if (!list.contains(p.src_addr) && !list.contains(p.dst_addr)) return Verdict::Forward;
    return policy == HandlingPolicy::FilterDrop ? Verdict::Drop : Verdict::Mirror;
}

Gateway::Gateway(NetConfig cfg, double eval_window, HandlingPolicy policy, double origin)
    : cfg_(std::move(cfg)), eval_window_(eval_window), policy_(policy), window_start_(origin) {
    if (!(eval_window_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "evaluation window must be positive");
}

Verdict Gateway::observe(const PacketRecord& p) {
    auto dir = direction_of(p, cfg_);
    if (!dir) {
        ++ignored_;
        return Verdict::Forward;
    }
    hosts_[remote_host(p, *dir)].add(p, *dir);
    return apply_policy(p, list_, policy_);
}

const HostAccumulator* Gateway::host_state(HostKey host) const {
    auto it = hosts_.find(host);
    return it == hosts_.end() ? nullptr : &it->second;
}

void Gateway::swap_model(std::shared_ptr<const DetectionModel> model) {
    if (model && model->schema_hash != kSchemaHash)
        throw Error(ErrorCode::SchemaMismatch, "model schema differs from the gateway encoder");
    model_ = std::move(model);
}

WindowVerdicts Gateway::classify_active_hosts(double t_end) {
    if (source_ != nullptr) {
        if (auto pulled = source_->latest(); pulled && pulled != last_pulled_) {
            last_pulled_ = pulled;
            swap_model(std::move(pulled));
        }
    }

    WindowVerdicts out;
    out.window = TimeWindow{window_start_, t_end};
    out.active_hosts = hosts_.size();
    if (!model_) {
        out.deferred = true;
        ++deferred_;
    } else {
        out.model_trained_at = model_->trained_at;
        for (const auto& [host, acc] : hosts_) {
            const Prediction pred = predict(*model_, encode(acc.finish(host, out.window)));
            out.verdicts.push_back({host, pred.label, pred.score, acc.in_count() + acc.out_count()});
            if (pred.label == Label::Malicious) list_.flag(host.addr, t_end);
        }
    }
    hosts_.clear();
    window_start_ = t_end;
    return out;
}

} // namespace adaptids
