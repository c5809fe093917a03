#pragma once

#include "adaptids/adapt.hpp"
#include "adaptids/core.hpp"
#include "adaptids/gateway.hpp"
#include "adaptids/learn.hpp"
#include "adaptids/metrics.hpp"
#include "adaptids/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaptids {

struct PortShare {
    std::optional<std::uint16_t> port;  ///< nullopt for the "others" bucket
    std::size_t flows = 0;
    double fraction = 0.0;

    friend bool operator==(const PortShare&, const PortShare&) = default;
};

/// Distinct (src, dst, sport, dport, proto) tuples among Incoming records,
/// counted per destination port. Sorted by flow count (desc) then port; the
/// remainder beyond top_n is folded into one trailing "others" entry.
/// top_n == 0 keeps every port.
std::vector<PortShare> port_distribution(std::span<const PacketRecord> records, const NetConfig& cfg,
                                         std::size_t top_n = 10);

struct WindowResult {
    TimeWindow window;
    EvalMetrics metrics;
    std::size_t active_hosts = 0;
    std::size_t labeled_hosts = 0;
    bool deferred = false;
    std::optional<double> model_trained_at;

    friend bool operator==(const WindowResult&, const WindowResult&) = default;
};

struct TrainingTime {
    double t = 0.0;
    std::size_t rows = 0;
    double seconds = 0.0;

    friend bool operator==(const TrainingTime&, const TrainingTime&) = default;
};

struct EvaluationReport {
    double origin = 0.0;  ///< absolute timestamp of simulated t = 0
    std::vector<WindowResult> windows;
    std::vector<UpdateEvent> updates;
    std::vector<PortShare> port_distribution;
    std::vector<TrainingTime> training_times;
    MaliciousList malicious_list;

    std::size_t deferred_windows() const;
    /// Mean F1 over non-deferred windows whose start lies in [from, to).
    /// nullopt when no window qualifies.
    std::optional<double> mean_f1(double from = 0.0, double to = kInfiniteDuration) const;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

struct ReplayConfig {
    UpdatePolicy policy;
    AlgorithmSpec spec;
    NetConfig net;
    double eval_window = 3600.0;
    HandlingPolicy handling = HandlingPolicy::RecordAndPass;
    /// Absolute time mapped to t = 0. Default: first timestamp rounded down
    /// to a multiple of eval_window.
    std::optional<double> origin;
    /// Simulated end (relative). Default: the eval boundary after the last packet.
    std::optional<double> end;
    std::size_t port_top_n = 10;
    UpdaterOptions updater;
    /// Route models through a file-drop channel at this path instead of memory.
    std::optional<std::filesystem::path> model_drop;
};

/// Replays a time-ordered stream through store, updater and gateway. Updates
/// and window boundaries fire before any packet at or after their instant;
/// at a shared instant the window is classified before the update runs.
/// Without a truth map, hosts are labeled from honeypot/device contact over
/// the whole stream. Throws Error(OutOfOrderTimestamp) on unordered input
/// and Error(InvalidConfig) on a bad configuration.
EvaluationReport replay(std::span<const PacketRecord> packets, const ReplayConfig& cfg,
                        const GroundTruth* truth = nullptr);

/// Writes f1_transitions.csv, port_distribution.csv, training_times.csv,
/// updates.ndjson, malicious_list.csv and report.json into dir (created if
/// missing). Throws Error(IoError).
void emit_report(const EvaluationReport& report, const std::filesystem::path& dir);

std::string report_to_json(const EvaluationReport& report);
/// Throws Error(MalformedFile).
EvaluationReport report_from_json(const std::string& text);
EvaluationReport load_report(const std::filesystem::path& path);

} // namespace adaptids
