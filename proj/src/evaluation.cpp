#include "adaptids/evaluation.hpp"

#include "adaptids/error.hpp"
#include "adaptids/format.hpp"
#include "adaptids/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

namespace adaptids {

std::vector<PortShare> port_distribution(std::span<const PacketRecord> records, const NetConfig& cfg,
                                         std::size_t top_n) {
    using FlowKey = std::tuple<std::uint32_t, std::uint32_t, std::uint16_t, std::uint16_t, std::uint8_t>;
    std::set<FlowKey> flows;
    for (const auto& p : records) {
        if (direction_of(p, cfg) != Direction::Incoming) continue;
        flows.emplace(p.src_addr.value, p.dst_addr.value, p.src_port, p.dst_port, p.proto);
    }
    if (flows.empty()) return {};

    std::map<std::uint16_t, std::size_t> per_port;
    for (const auto& f : flows) ++per_port[std::get<3>(f)];

    std::vector<PortShare> out;
    out.reserve(per_port.size());
    for (const auto& [port, n] : per_port) out.push_back({port, n, 0.0});
    std::stable_sort(out.begin(), out.end(), [](const PortShare& a, const PortShare& b) { return a.flows > b.flows; });

    if (top_n > 0 && out.size() > top_n) {
        PortShare others;
        for (std::size_t i = top_n; i < out.size(); ++i) others.flows += out[i].flows;
        out.resize(top_n);
        out.push_back(others);
    }
    const auto total = static_cast<double>(flows.size());
    for (auto& s : out) s.fraction = static_cast<double>(s.flows) / total;
    return out;
}

std::size_t EvaluationReport::deferred_windows() const {
    return static_cast<std::size_t>(
        std::count_if(windows.begin(), windows.end(), [](const WindowResult& w) { return w.deferred; }));
}

std::optional<double> EvaluationReport::mean_f1(double from, double to) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
        if (w.deferred || w.window.start < from || w.window.start >= to) continue;
        sum += w.metrics.f1;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

namespace {

GroundTruth truth_from_contacts(std::span<const PacketRecord> packets, const NetConfig& cfg) {
    GroundTruth truth;
    for (const auto& [host, contact] : label_hosts(packets, cfg).entries) truth[host] = contact.label;
    return truth;
}

WindowResult score(const WindowVerdicts& wv, const GroundTruth& truth) {
    WindowResult r;
    r.window = wv.window;
    r.active_hosts = wv.active_hosts;
    r.deferred = wv.deferred;
    r.model_trained_at = wv.model_trained_at;
    if (wv.deferred) return r;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& v : wv.verdicts) {
        auto it = truth.find(v.host);
        if (it == truth.end()) continue;
        const bool pred = v.label == Label::Malicious;
        const bool real = it->second == Label::Malicious;
        if (pred && real) ++tp;
        else if (pred) ++fp;
        else if (real) ++fn;
        else ++tn;
    }
    r.metrics = metrics_from_counts(tp, fp, fn, tn);
    r.labeled_hosts = r.metrics.total();
    return r;
}

} // namespace

EvaluationReport replay(std::span<const PacketRecord> packets, const ReplayConfig& cfg, const GroundTruth* truth) {
    cfg.policy.validate();
    cfg.net.validate();
    if (!(cfg.eval_window > 0.0) || !std::isfinite(cfg.eval_window))
        throw Error(ErrorCode::InvalidConfig, "eval window must be positive");
    for (std::size_t i = 1; i < packets.size(); ++i) {
        if (packets[i].ts < packets[i - 1].ts)
            throw Error(ErrorCode::OutOfOrderTimestamp, "packet " + std::to_string(i) + " goes back in time");
    }

    const double E = cfg.eval_window;
    EvaluationReport report;
    report.origin = cfg.origin.value_or(packets.empty() ? 0.0 : std::floor(packets.front().ts / E) * E);
    if (!packets.empty() && packets.front().ts < report.origin)
        throw Error(ErrorCode::InvalidConfig, "first packet precedes the replay origin");

    double end = 0.0;
    if (cfg.end) {
        end = *cfg.end;
    } else if (!packets.empty()) {
        end = (std::floor((packets.back().ts - report.origin) / E) + 1.0) * E;
    }

    GroundTruth derived;
    if (truth == nullptr) {
        derived = truth_from_contacts(packets, cfg.net);
        truth = &derived;
    }

    std::unique_ptr<ModelChannel> channel;
    if (cfg.model_drop) {
        std::error_code ec;
        std::filesystem::remove(*cfg.model_drop, ec);
        channel = std::make_unique<FileDropChannel>(*cfg.model_drop);
    } else {
        channel = std::make_unique<InProcessChannel>();
    }

    TrafficStore store;
    ModelUpdater updater(store, cfg.policy, cfg.spec, cfg.net, *channel, cfg.updater);
    Gateway gateway(cfg.net, E, cfg.handling, 0.0);
    gateway.attach(*channel);

    std::uint64_t boundary_k = 1;
    auto run_until = [&](double t) {
        for (;;) {
            const double boundary = static_cast<double>(boundary_k) * E;
            const double ne = boundary <= end ? boundary : kInfiniteDuration;
            const double nu = updater.next_update().value_or(kInfiniteDuration);
            const double nu_in = nu <= end ? nu : kInfiniteDuration;
            const double next = std::min(ne, nu_in);
            if (next == kInfiniteDuration || next > t) return;
            if (ne <= nu_in) {
                report.windows.push_back(score(gateway.classify_active_hosts(ne), *truth));
                ++boundary_k;
            } else {
                updater.advance_to(nu_in);
            }
        }
    };

    for (const auto& abs : packets) {
        PacketRecord p = abs;
        p.ts = abs.ts - report.origin;
        if (p.ts >= end) break;
        run_until(p.ts);
        gateway.observe(p);
        if (updater.needs_records()) {
            if (auto dir = direction_of(p, cfg.net)) store.append(p, *dir, remote_host(p, *dir));
        }
    }
    run_until(end);

    report.updates = updater.log();
    for (const auto& u : report.updates) {
        if (u.rows() > 0 && (u.published || u.note == "single_class"))
            report.training_times.push_back({u.t, u.rows(), u.train_seconds});
    }
    report.port_distribution = port_distribution(packets, cfg.net, cfg.port_top_n);
    report.malicious_list = gateway.malicious_list();
    return report;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson optional_json(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

ojson to_json(const EvaluationReport& r) {
    ojson j;
    j["origin"] = r.origin;
    ojson windows = ojson::array();
    for (const auto& w : r.windows) {
        ojson e;
        e["window_start"] = w.window.start;
        e["window_end"] = w.window.end;
        e["deferred"] = w.deferred;
        e["tp"] = w.metrics.tp;
        e["fp"] = w.metrics.fp;
        e["fn"] = w.metrics.fn;
        e["tn"] = w.metrics.tn;
        e["active_hosts"] = w.active_hosts;
        e["model_trained_at"] = optional_json(w.model_trained_at);
        windows.push_back(std::move(e));
    }
    j["windows"] = std::move(windows);
    ojson updates = ojson::array();
    for (const auto& u : r.updates) updates.push_back(ojson::parse(to_ndjson(u)));
    j["updates"] = std::move(updates);
    ojson ports = ojson::array();
    for (const auto& s : r.port_distribution) {
        ojson e;
        e["dst_port"] = s.port ? ojson(*s.port) : ojson(nullptr);
        e["flows"] = s.flows;
        e["fraction"] = s.fraction;
        ports.push_back(std::move(e));
    }
    j["port_distribution"] = std::move(ports);
    ojson times = ojson::array();
    for (const auto& t : r.training_times) times.push_back(ojson{{"t", t.t}, {"rows", t.rows}, {"seconds", t.seconds}});
    j["training_times"] = std::move(times);
    ojson list = ojson::array();
    for (const auto& [addr, e] : r.malicious_list.entries()) {
        list.push_back(ojson{{"addr", addr.to_string()},
                             {"first_flagged", e.first_flagged},
                             {"last_flagged", e.last_flagged},
                             {"flag_count", e.flag_count}});
    }
    j["malicious_list"] = std::move(list);
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

} // namespace

std::string report_to_json(const EvaluationReport& report) {
    return to_json(report).dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
    EvaluationReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.origin = j.at("origin").get<double>();
        for (const auto& e : j.at("windows")) {
            WindowResult w;
            w.window = {e.at("window_start").get<double>(), e.at("window_end").get<double>()};
            w.deferred = e.at("deferred").get<bool>();
            w.active_hosts = e.at("active_hosts").get<std::size_t>();
            if (!e.at("model_trained_at").is_null()) w.model_trained_at = e.at("model_trained_at").get<double>();
            if (!w.deferred) {
                w.metrics = metrics_from_counts(e.at("tp").get<std::size_t>(), e.at("fp").get<std::size_t>(),
                                                e.at("fn").get<std::size_t>(), e.at("tn").get<std::size_t>());
                w.labeled_hosts = w.metrics.total();
            }
            r.windows.push_back(w);
        }
        for (const auto& e : j.at("updates")) {
            UpdateEvent u;
            u.t = e.at("t").get<double>();
            u.window = {e.at("window_start").get<double>(), e.at("window_end").get<double>()};
            u.benign_rows = e.at("benign_rows").get<std::size_t>();
            u.malicious_rows = e.at("malicious_rows").get<std::size_t>();
            u.train_seconds = e.at("train_seconds").get<double>();
            u.published = e.at("published").get<bool>();
            u.note = e.at("note").get<std::string>();
            r.updates.push_back(std::move(u));
        }
        for (const auto& e : j.at("port_distribution")) {
            PortShare s;
            if (!e.at("dst_port").is_null()) s.port = e.at("dst_port").get<std::uint16_t>();
            s.flows = e.at("flows").get<std::size_t>();
            s.fraction = e.at("fraction").get<double>();
            r.port_distribution.push_back(s);
        }
        for (const auto& e : j.at("training_times")) {
            r.training_times.push_back(
                {e.at("t").get<double>(), e.at("rows").get<std::size_t>(), e.at("seconds").get<double>()});
        }
        for (const auto& e : j.at("malicious_list")) {
            const auto addr = Ipv4::parse(e.at("addr").get<std::string>());
            if (!addr) throw Error(ErrorCode::MalformedFile, "bad address in malicious list");
            r.malicious_list.restore(*addr, ListEntry{e.at("first_flagged").get<double>(),
                                                      e.at("last_flagged").get<double>(),
                                                      e.at("flag_count").get<std::uint64_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedFile, std::string("report: ") + e.what());
    }
    return r;
}

EvaluationReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

void emit_report(const EvaluationReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());

    std::ostringstream f1;
    f1 << "window_start,window_end,tp,fp,fn,tn,f1,active_hosts\n";
    for (const auto& w : report.windows) {
        f1 << format_double(w.window.start) << ',' << format_double(w.window.end) << ',';
        if (w.deferred) {
            f1 << ",,,,,";
        } else {
            f1 << w.metrics.tp << ',' << w.metrics.fp << ',' << w.metrics.fn << ',' << w.metrics.tn << ','
               << format_double(w.metrics.f1) << ',';
        }
        f1 << w.active_hosts << '\n';
    }
    write_file(dir / "f1_transitions.csv", f1.str());

    std::ostringstream ports;
    ports << "dst_port,flows,fraction\n";
    for (const auto& s : report.port_distribution) {
        ports << (s.port ? std::to_string(*s.port) : std::string("others")) << ',' << s.flows << ','
              << format_double(s.fraction) << '\n';
    }
    write_file(dir / "port_distribution.csv", ports.str());

    std::ostringstream times;
    times << "t,rows,seconds\n";
    for (const auto& t : report.training_times)
        times << format_double(t.t) << ',' << t.rows << ',' << format_double(t.seconds) << '\n';
    write_file(dir / "training_times.csv", times.str());

    std::ostringstream updates;
    write_update_log(updates, report.updates);
    write_file(dir / "updates.ndjson", updates.str());

    std::ostringstream list;
    report.malicious_list.write_csv(list);
    write_file(dir / "malicious_list.csv", list.str());

    write_file(dir / "report.json", report_to_json(report));
}

} // namespace adaptids
