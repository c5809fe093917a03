#include "adaptids/adapt.hpp"

#include "adaptids/error.hpp"
#include "adaptids/featurize.hpp"
#include "adaptids/model_io.hpp"

#include <json.hpp>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>

namespace adaptids {

void UpdatePolicy::validate() const {
    if (!(t_duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "t_duration must be positive");
    if (kind == UpdateMethod::SCM && infinite())
        throw Error(ErrorCode::InvalidConfig, "an infinite t_duration is only valid for DUM");
    if (kind == UpdateMethod::DUM && !(t_update > 0.0 && std::isfinite(t_update)))
        throw Error(ErrorCode::InvalidConfig, "DUM requires a positive finite t_update");
}

double update_time(const UpdatePolicy& policy, std::uint64_t k) noexcept {
    if (policy.kind == UpdateMethod::SCM) return k == 1 ? policy.t_duration : kInfiniteDuration;
    return static_cast<double>(k) * policy.t_update;
}

std::optional<TimeWindow> training_window(const UpdatePolicy& policy, double t) noexcept {
    if (policy.kind == UpdateMethod::SCM) {
        if (t == policy.t_duration) return TimeWindow{0.0, policy.t_duration};
        return std::nullopt;
    }
    if (!(t > 0.0) || !(policy.t_update > 0.0) || !std::isfinite(t)) return std::nullopt;
    const double approx = std::round(t / policy.t_update);
    bool scheduled = false;
    for (double k = std::max(1.0, approx - 1.0); k <= approx + 1.0; k += 1.0) {
        if (update_time(policy, static_cast<std::uint64_t>(k)) == t) scheduled = true;
    }
    if (!scheduled) return std::nullopt;
    const double start = policy.infinite() ? 0.0 : std::max(0.0, t - policy.t_duration);
    return TimeWindow{start, t};
}

void InProcessChannel::publish(const DetectionModel& model) {
    auto next = std::make_shared<const DetectionModel>(model);
    std::lock_guard lock(mutex_);
    current_ = std::move(next);
}

std::shared_ptr<const DetectionModel> InProcessChannel::latest() const {
    std::lock_guard lock(mutex_);
    return current_;
}

FileDropChannel::FileDropChannel(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
}

void FileDropChannel::publish(const DetectionModel& model) {
    const auto bytes = serialize_model(model);
    auto tmp = path_;
    tmp += ".tmp-" + std::to_string(::getpid()) + "-" +
           std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" + std::to_string(sequence_++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorCode::ChannelUnavailable, "cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::ChannelUnavailable, "cannot rename onto " + path_.string());
    }
}

std::shared_ptr<const DetectionModel> FileDropChannel::latest() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        std::error_code ec;
        if (!std::filesystem::exists(path_, ec)) return nullptr;
        throw Error(ErrorCode::ChannelUnavailable, "cannot read " + path_.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return std::make_shared<const DetectionModel>(deserialize_model(std::as_bytes(std::span<const char>(raw))));
}

std::string to_ndjson(const UpdateEvent& e) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["window_start"] = e.window.start;
    j["window_end"] = e.window.end;
    j["benign_rows"] = e.benign_rows;
    j["malicious_rows"] = e.malicious_rows;
    j["train_seconds"] = e.train_seconds;
    j["published"] = e.published;
    j["note"] = e.note;
    return j.dump();
}

void write_update_log(std::ostream& out, std::span<const UpdateEvent> log) {
    for (const auto& e : log) out << to_ndjson(e) << '\n';
}

ModelUpdater::ModelUpdater(TrafficStore& store, UpdatePolicy policy, AlgorithmSpec spec, NetConfig cfg,
                           ModelChannel& channel, UpdaterOptions options)
    : store_(store), policy_(policy), spec_(spec), cfg_(std::move(cfg)), channel_(channel), options_(options) {
    policy_.validate();
}

std::optional<double> ModelUpdater::next_update() const noexcept {
    if (policy_.kind == UpdateMethod::SCM) {
        if (scm_fired_) return std::nullopt;
        return policy_.t_duration;
    }
    return update_time(policy_, next_k_);
}

void ModelUpdater::advance_to(double t) {
    while (auto next = next_update()) {
        if (*next > t) break;
        fire(*next);
        if (policy_.kind == UpdateMethod::SCM) scm_fired_ = true;
        else ++next_k_;
    }
}

void ModelUpdater::fire(double t) {
    UpdateEvent event;
    event.t = t;
    event.window = *training_window(policy_, t);
    try {
        const LabeledDataset ds = build_dataset(store_, event.window, cfg_);
        event.benign_rows = ds.count(Label::Benign);
        event.malicious_rows = ds.count(Label::Malicious);
        TrainResult result = train(spec_, ds, t);
        if (options_.record_train_time) event.train_seconds = result.train_seconds;
        if (result.single_class && options_.retain_on_single_class) {
            event.note = "single_class";
        } else {
            channel_.publish(result.model);
            event.published = true;
        }
    } catch (const Error& e) {
        event.note = e.code() == ErrorCode::EmptyWindow ? std::string("empty_window") : std::string(e.what());
    } catch (const std::exception& e) {
        event.note = e.what();
    }
    if (policy_.kind == UpdateMethod::DUM && !policy_.infinite()) store_.evict_before(t - policy_.t_duration);
    log_.push_back(std::move(event));
}

std::vector<UpdateEvent> run_updater(TrafficStore& store, const UpdatePolicy& policy, const AlgorithmSpec& spec,
                                     const NetConfig& cfg, ModelChannel& channel, std::span<const double> clock,
                                     UpdaterOptions options) {
    ModelUpdater updater(store, policy, spec, cfg, channel, options);
    for (double t : clock) updater.advance_to(t);
    return updater.log();
}

} // namespace adaptids
