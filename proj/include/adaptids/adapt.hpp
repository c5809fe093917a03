#pragma once

#include "adaptids/core.hpp"
#include "adaptids/ingest.hpp"
#include "adaptids/learn.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaptids {

inline constexpr double kInfiniteDuration = std::numeric_limits<double>::infinity();

enum class UpdateMethod : std::uint8_t { SCM, DUM };

/// SCM trains once on [0, t_duration). DUM retrains every t_update seconds on
/// the trailing t_duration seconds (all history when t_duration is infinite).
struct UpdatePolicy {
    UpdateMethod kind = UpdateMethod::DUM;
    double t_duration = 3600.0;
    double t_update = 3600.0;  // ignored by SCM

    bool infinite() const noexcept { return t_duration == kInfiniteDuration; }
    /// Throws Error(InvalidConfig) on non-positive durations, SCM with an
    /// infinite duration, or DUM without a positive t_update.
    void validate() const;
};

/// The k-th scheduled update time (k >= 1).
double update_time(const UpdatePolicy& policy, std::uint64_t k) noexcept;

/// Training window for an update firing at simulated time t, or nullopt when
/// t is not an update instant. DUM instants are exactly the values
/// k * t_update (k >= 1) as computed by update_time.
std::optional<TimeWindow> training_window(const UpdatePolicy& policy, double t) noexcept;

/// Hand-off point between the updater and the gateway. Implementations must
/// never expose a partially written model.
class ModelChannel {
public:
    virtual ~ModelChannel() = default;
    /// Throws Error(ChannelUnavailable) on transport failure.
    virtual void publish(const DetectionModel& model) = 0;
    virtual std::shared_ptr<const DetectionModel> latest() const = 0;
};

class InProcessChannel final : public ModelChannel {
public:
    void publish(const DetectionModel& model) override;
    std::shared_ptr<const DetectionModel> latest() const override;

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const DetectionModel> current_;
};

/// Writes the serialized model to a sibling temp file and renames it over the
/// target path, so readers see either the old or the new file in full.
class FileDropChannel final : public ModelChannel {
public:
    explicit FileDropChannel(std::filesystem::path path);

    void publish(const DetectionModel& model) override;
    /// nullptr when nothing has been published yet.
    std::shared_ptr<const DetectionModel> latest() const override;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::uint64_t sequence_ = 0;
};

struct UpdateEvent {
    double t = 0.0;
    TimeWindow window;
    std::size_t benign_rows = 0;
    std::size_t malicious_rows = 0;
    double train_seconds = 0.0;
    bool published = false;
    std::string note;  ///< skip or failure reason; empty on success

    std::size_t rows() const noexcept { return benign_rows + malicious_rows; }
    friend bool operator==(const UpdateEvent&, const UpdateEvent&) = default;
};

std::string to_ndjson(const UpdateEvent& e);
void write_update_log(std::ostream& out, std::span<const UpdateEvent> log);

struct UpdaterOptions {
    /// Keep the previously published model when a window holds one class.
    bool retain_on_single_class = true;
    /// Record wall-clock training time; off yields fully reproducible logs.
    bool record_train_time = true;
};

/// Drives retraining over the shared store. advance_to(t) runs every update
/// scheduled at or before t that has not fired yet, in order.
class ModelUpdater {
public:
    ModelUpdater(TrafficStore& store, UpdatePolicy policy, AlgorithmSpec spec, NetConfig cfg,
                 ModelChannel& channel, UpdaterOptions options = {});

    void advance_to(double t);
    /// Time of the next pending update; nullopt once SCM has fired.
    std::optional<double> next_update() const noexcept;
    /// False once no future update can use newly appended records.
    bool needs_records() const noexcept { return next_update().has_value(); }

    const std::vector<UpdateEvent>& log() const noexcept { return log_; }

private:
    void fire(double t);

    TrafficStore& store_;
    UpdatePolicy policy_;
    AlgorithmSpec spec_;
    NetConfig cfg_;
    ModelChannel& channel_;
    UpdaterOptions options_;
    std::uint64_t next_k_ = 1;
    bool scm_fired_ = false;
    std::vector<UpdateEvent> log_;
};

/// Runs the updater over an explicit sequence of simulated clock readings.
std::vector<UpdateEvent> run_updater(TrafficStore& store, const UpdatePolicy& policy, const AlgorithmSpec& spec,
                                     const NetConfig& cfg, ModelChannel& channel, std::span<const double> clock,
                                     UpdaterOptions options = {});

} // namespace adaptids
