#pragma once

#include "adaptids/adapt.hpp"
#include "adaptids/core.hpp"
#include "adaptids/featurize.hpp"
#include "adaptids/learn.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace adaptids {

struct ListEntry {
    double first_flagged = 0.0;
    double last_flagged = 0.0;
    std::uint64_t flag_count = 0;
    friend bool operator==(const ListEntry&, const ListEntry&) = default;
};

/// Remote addresses the gateway has classified as malicious. Entries are
/// never removed during a replay.
class MaliciousList {
public:
    void flag(Ipv4 addr, double t);
    /// Reinstates a saved entry verbatim.
    void restore(Ipv4 addr, const ListEntry& entry) { entries_[addr] = entry; }
    bool contains(Ipv4 addr) const { return entries_.count(addr) > 0; }
    const ListEntry* find(Ipv4 addr) const;
    const std::map<Ipv4, ListEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// CSV: addr,first_flagged,last_flagged,flag_count
    void write_csv(std::ostream& out) const;

    friend bool operator==(const MaliciousList&, const MaliciousList&) = default;

private:
    std::map<Ipv4, ListEntry> entries_;
};

enum class HandlingPolicy : std::uint8_t { FilterDrop, RecordAndPass };
enum class Verdict : std::uint8_t { Forward, Drop, Mirror };

/// Forward for unlisted hosts; Drop or Mirror (forward + record) otherwise.
Verdict apply_policy(const PacketRecord& p, const MaliciousList& list, HandlingPolicy policy) noexcept;

struct HostVerdict {
    HostKey host;
    Label label = Label::Benign;
    double score = 0.0;
    std::size_t packets = 0;
};

struct WindowVerdicts {
    TimeWindow window;
    bool deferred = false;  ///< no model was available at the boundary
    std::optional<double> model_trained_at;
    std::size_t active_hosts = 0;
    std::vector<HostVerdict> verdicts;  ///< ordered by host address; empty when deferred
};

/// Per-window host classification at the network edge. Packets are observed
/// in time order; at every evaluation boundary the active hosts are scored
/// with whichever model is current at that instant.
class Gateway {
public:
    Gateway(NetConfig cfg, double eval_window, HandlingPolicy policy = HandlingPolicy::RecordAndPass,
            double origin = 0.0);

    /// Pull models from this channel at each boundary (optional).
    void attach(const ModelChannel& channel) { source_ = &channel; }

    /// Accumulates p into the open window and returns the handling verdict.
    /// Local-to-local and remote-to-remote packets are counted and ignored.
    Verdict observe(const PacketRecord& p);

    /// Closes the window ending at t_end: scores every active host, updates
    /// the malicious list, and opens [t_end, t_end + eval_window). Returns a
    /// deferred result when no model has been received yet.
    WindowVerdicts classify_active_hosts(double t_end);

    /// Takes effect at the next boundary. Throws Error(SchemaMismatch).
    void swap_model(std::shared_ptr<const DetectionModel> model);

    TimeWindow current_window() const noexcept { return {window_start_, window_start_ + eval_window_}; }
    std::size_t active_hosts() const noexcept { return hosts_.size(); }
    const HostAccumulator* host_state(HostKey host) const;

    const MaliciousList& malicious_list() const noexcept { return list_; }
    HandlingPolicy policy() const noexcept { return policy_; }
    std::size_t ignored_packets() const noexcept { return ignored_; }
    std::size_t deferred_windows() const noexcept { return deferred_; }

private:
    NetConfig cfg_;
    double eval_window_;
    HandlingPolicy policy_;
    double window_start_;
    const ModelChannel* source_ = nullptr;
    std::shared_ptr<const DetectionModel> model_;
    std::shared_ptr<const DetectionModel> last_pulled_;
    std::map<HostKey, HostAccumulator> hosts_;
    MaliciousList list_;
    std::size_t ignored_ = 0;
    std::size_t deferred_ = 0;
};

} // namespace adaptids
