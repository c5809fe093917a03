// adaptids: command-line front end for ingest, training, replay and scenario
// generation.

#include "adaptids/adapt.hpp"
#include "adaptids/error.hpp"
#include "adaptids/evaluation.hpp"
#include "adaptids/featurize.hpp"
#include "adaptids/ingest.hpp"
#include "adaptids/learn.hpp"
#include "adaptids/model_io.hpp"
#include "adaptids/ndjson.hpp"
#include "adaptids/pcap.hpp"
#include "adaptids/scenario.hpp"

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace adaptids;

constexpr int kExitInput = 2;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every option is kept as text so a --config file can override any of them
/// after the command line has been parsed.
struct Options {
    std::string input;
    std::string output;
    std::string out_dir = "out";
    std::string truth;
    std::string report;
    std::string policy = "dum";
    std::string t_duration = "3600";
    std::string t_update = "3600";
    std::string algo = "dt";
    std::string eval_window = "3600";
    std::string seed = "0";
    std::string local_net;
    std::string honeypot;
    std::string devices;
    std::string start;
    std::string end;
    std::string preset = "separable";
    std::string scenario_seed = "1";
    std::string duration;
    std::string hosts;
    std::string pcap_out;
    std::string handling = "record";
    std::string model_drop;
    std::string top_ports = "10";
    std::string timing = "on";
    std::string config;

    std::map<std::string, std::string*> keys() {
        return {{"input", &input},       {"output", &output},
                {"out", &out_dir},       {"truth", &truth},
                {"report", &report},     {"policy", &policy},
                {"t-duration", &t_duration}, {"t-update", &t_update},
                {"algo", &algo},         {"eval-window", &eval_window},
                {"seed", &seed},         {"local-net", &local_net},
                {"honeypot", &honeypot}, {"devices", &devices},
                {"start", &start},       {"end", &end},
                {"preset", &preset},     {"scenario-seed", &scenario_seed},
                {"duration", &duration}, {"hosts", &hosts},
                {"pcap", &pcap_out},     {"handling", &handling},
                {"model-drop", &model_drop}, {"top-ports", &top_ports},
                {"timing", &timing}};
    }
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void apply_config(Options& opt) {
    if (opt.config.empty()) return;
    std::ifstream in(opt.config);
    if (!in) throw InputError("cannot open config " + opt.config);
    auto keys = opt.keys();
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(opt.config + ":" + std::to_string(n) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        for (auto& c : key) if (c == '_') c = '-';
        auto it = keys.find(key);
        if (it == keys.end()) throw InputError(opt.config + ":" + std::to_string(n) + ": unknown key " + key);
        *it->second = trim(line.substr(eq + 1));
    }
}

double to_seconds(const std::string& text, const char* what, bool allow_inf = false) {
    if (allow_inf && (text == "inf" || text == "infinity")) return kInfiniteDuration;
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !(v >= 0.0) || !std::isfinite(v))
        throw InputError(std::string("invalid ") + what + ": '" + text + "'");
    return v;
}

std::uint64_t to_u64(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw InputError(std::string("invalid ") + what + ": '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Ipv4 to_addr(const std::string& text) {
    auto a = Ipv4::parse(text);
    if (!a) throw InputError("invalid IPv4 address '" + text + "'");
    return *a;
}

// Without any network flag the scenario defaults apply.
NetConfig net_from(const Options& opt) {
    if (opt.local_net.empty() && opt.honeypot.empty() && opt.devices.empty()) return ScenarioConfig::default_net();
    NetConfig cfg;
    for (const auto& c : split_list(opt.local_net)) {
        auto cidr = Cidr::parse(c);
        if (!cidr) throw InputError("invalid CIDR '" + c + "'");
        cfg.local_nets.push_back(*cidr);
    }
    for (const auto& a : split_list(opt.honeypot)) cfg.honeypot_addrs.insert(to_addr(a));
    for (const auto& a : split_list(opt.devices)) cfg.device_addrs.insert(to_addr(a));
    if (cfg.local_nets.empty()) throw InputError("--local-net is required with --honeypot/--devices");
    cfg.validate();
    return cfg;
}

AlgorithmSpec spec_from(const Options& opt) {
    AlgorithmSpec spec;
    auto kind = parse_algorithm(opt.algo);
    if (!kind) throw InputError("unknown algorithm '" + opt.algo + "' (knn, dt, rf, gbdt)");
    spec.kind = *kind;
    spec.rng_seed = to_u64(opt.seed, "seed");
    return spec;
}

UpdatePolicy policy_from(const Options& opt) {
    UpdatePolicy p;
    if (opt.policy == "scm") p.kind = UpdateMethod::SCM;
    else if (opt.policy == "dum") p.kind = UpdateMethod::DUM;
    else throw InputError("unknown policy '" + opt.policy + "' (scm, dum)");
    p.t_duration = to_seconds(opt.t_duration, "t-duration", true);
    p.t_update = to_seconds(opt.t_update, "t-update");
    p.validate();
    return p;
}

bool looks_like_pcap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, 4> m{};
    if (!in.read(reinterpret_cast<char*>(m.data()), 4)) return false;
    const std::uint32_t le = m[0] | (m[1] << 8) | (m[2] << 16) | (std::uint32_t{m[3]} << 24);
    return le == 0xA1B2C3D4u || le == 0xD4C3B2A1u || le == 0xA1B23C4Du || le == 0x4D3CB2A1u;
}

std::vector<PacketRecord> load_packets(const std::string& path) {
    if (path.empty()) throw InputError("--input is required");
    if (!std::filesystem::exists(path)) throw InputError("no such file: " + path);
    if (looks_like_pcap(path)) {
        auto r = pcap::read_pcap(path);
        const auto& s = r.stats;
        std::cerr << "pcap: " << s.frames << " frames, " << r.records.size() << " records, " << s.non_ipv4
                  << " non-IPv4, " << s.truncated << " truncated, " << s.invalid << " invalid\n";
        return std::move(r.records);
    }
    auto r = ndjson::read(std::filesystem::path(path));
    for (const auto& issue : r.skipped) std::cerr << path << ":" << issue.line << ": skipped: " << issue.reason << "\n";
    return std::move(r.records);
}

GroundTruth load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open truth file " + path);
    GroundTruth truth;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError("bad truth line: " + line);
        const std::string label = trim(line.substr(comma + 1));
        Label l;
        if (label == "malicious") l = Label::Malicious;
        else if (label == "benign") l = Label::Benign;
        else throw InputError("bad label in truth file: " + label);
        truth[HostKey{to_addr(trim(line.substr(0, comma)))}] = l;
    }
    return truth;
}

void ensure_parent(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

int cmd_ingest(const Options& opt) {
    const auto records = load_packets(opt.input);
    if (opt.output.empty() || opt.output == "-") {
        ndjson::write(std::cout, records);
    } else {
        ensure_parent(opt.output);
        std::ofstream out(opt.output, std::ios::binary | std::ios::trunc);
        ndjson::write(out, records);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + opt.output);
    }
    return 0;
}

int cmd_train(const Options& opt) {
    const NetConfig net = net_from(opt);
    const AlgorithmSpec spec = spec_from(opt);
    const auto records = load_packets(opt.input);
    if (records.empty()) throw Error(ErrorCode::EmptyWindow, "input holds no packets");

    TrafficStore store;
    for (const auto& p : records) {
        if (auto dir = direction_of(p, net)) store.append(p, *dir, remote_host(p, *dir));
    }
    TimeWindow w{records.front().ts, std::nextafter(records.back().ts, kInfiniteDuration)};
    if (!opt.start.empty()) w.start = to_seconds(opt.start, "start");
    if (!opt.end.empty()) w.end = to_seconds(opt.end, "end");
    if (!(w.end > w.start)) throw InputError("training window is empty");

    const LabeledDataset ds = build_dataset(store, w, net);
    const TrainResult result = train(spec, ds);
    const std::string path = opt.output.empty() ? std::string("model.sadm") : opt.output;
    ensure_parent(path);
    save_model(path, result.model);
    std::cerr << "trained " << to_string(spec.kind) << " on " << ds.count(Label::Benign) << " benign / "
              << ds.count(Label::Malicious) << " malicious rows in " << result.train_seconds << " s"
              << (result.single_class ? " (single class)" : "") << " -> " << path << "\n";
    return 0;
}

int cmd_replay(const Options& opt) {
    ReplayConfig cfg;
    cfg.net = net_from(opt);
    cfg.spec = spec_from(opt);
    cfg.policy = policy_from(opt);
    cfg.eval_window = to_seconds(opt.eval_window, "eval-window");
    cfg.port_top_n = to_u64(opt.top_ports, "top-ports");
    if (opt.handling == "drop") cfg.handling = HandlingPolicy::FilterDrop;
    else if (opt.handling != "record") throw InputError("unknown handling '" + opt.handling + "' (drop, record)");
    if (!opt.model_drop.empty()) cfg.model_drop = opt.model_drop;
    if (opt.timing == "off") cfg.updater.record_train_time = false;
    else if (opt.timing != "on") throw InputError("unknown timing '" + opt.timing + "' (on, off)");

    const auto records = load_packets(opt.input);
    GroundTruth truth;
    if (!opt.truth.empty()) truth = load_truth(opt.truth);
    const EvaluationReport report = replay(records, cfg, opt.truth.empty() ? nullptr : &truth);
    emit_report(report, opt.out_dir);

    const auto mean = report.mean_f1();
    std::cerr << report.windows.size() << " windows (" << report.deferred_windows() << " deferred), "
              << report.updates.size() << " updates, mean F1 "
              << (mean ? std::to_string(*mean) : std::string("n/a")) << " -> " << opt.out_dir << "\n";
    return 0;
}

int cmd_gen(const Options& opt) {
    const std::uint64_t seed = to_u64(opt.scenario_seed, "scenario-seed");
    ScenarioConfig cfg;
    if (opt.preset == "separable") cfg = separable_scenario(seed);
    else if (opt.preset == "shift") cfg = shift_scenario(seed);
    else throw InputError("unknown preset '" + opt.preset + "' (separable, shift)");
    if (!opt.duration.empty()) {
        cfg.duration = to_seconds(opt.duration, "duration");
        if (cfg.shift_at) cfg.shift_at = cfg.duration / 2.0;
    }
    if (!opt.hosts.empty()) cfg.benign_hosts = cfg.malicious_hosts = to_u64(opt.hosts, "hosts");
    if (!opt.local_net.empty() || !opt.honeypot.empty() || !opt.devices.empty()) cfg.net = net_from(opt);

    const Scenario sc = generate_synthetic(cfg);
    const std::filesystem::path dir = opt.out_dir;
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "packets.ndjson", std::ios::binary | std::ios::trunc);
        ndjson::write(out, sc.packets);
        if (!out) throw Error(ErrorCode::IoError, "cannot write packets.ndjson");
    }
    {
        std::ofstream out(dir / "truth.csv", std::ios::binary | std::ios::trunc);
        out << "addr,label\n";
        for (const auto& [host, label] : sc.truth) out << host.addr.to_string() << ',' << to_string(label) << '\n';
        if (!out) throw Error(ErrorCode::IoError, "cannot write truth.csv");
    }
    if (!opt.pcap_out.empty()) {
        pcap::Writer w(opt.pcap_out);
        for (const auto& p : sc.packets) w.write(p);
    }
    std::cerr << sc.packets.size() << " packets, " << sc.truth.size() << " hosts -> " << dir.string() << "\n";
    return 0;
}

int cmd_report(const Options& opt) {
    if (opt.report.empty()) throw InputError("--report is required");
    emit_report(load_report(opt.report), opt.out_dir);
    return 0;
}

void add_net(CLI::App* sub, Options& opt) {
    sub->add_option("--local-net", opt.local_net, "Local CIDR(s), comma separated");
    sub->add_option("--honeypot", opt.honeypot, "Honeypot address(es), comma separated");
    sub->add_option("--devices", opt.devices, "Device address(es), comma separated");
}

void add_model(CLI::App* sub, Options& opt) {
    sub->add_option("--algo", opt.algo, "knn, dt, rf or gbdt")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Training RNG seed")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive honeypot-labeled intrusion detection toolkit"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config, "key=value file; its entries override command-line flags");

    auto* ingest = app.add_subcommand("ingest", "Convert pcap (or NDJSON) to NDJSON");
    ingest->add_option("--input", opt.input, "pcap or NDJSON file")->required();
    ingest->add_option("--output", opt.output, "NDJSON destination ('-' for stdout)");

    auto* train = app.add_subcommand("train", "Build one model from a capture");
    train->add_option("--input", opt.input, "pcap or NDJSON file");
    train->add_option("--output", opt.output, "Model file")->capture_default_str();
    train->add_option("--start", opt.start, "Window start (absolute seconds)");
    train->add_option("--end", opt.end, "Window end (absolute seconds, exclusive)");
    add_model(train, opt);
    add_net(train, opt);

    auto* rep = app.add_subcommand("replay", "Evaluate an update policy over a capture");
    rep->add_option("--input", opt.input, "pcap or NDJSON file");
    rep->add_option("--truth", opt.truth, "addr,label CSV (default: honeypot-contact labels)");
    rep->add_option("--policy", opt.policy, "scm or dum")->capture_default_str();
    rep->add_option("--t-duration", opt.t_duration, "Training window seconds or 'inf'")->capture_default_str();
    rep->add_option("--t-update", opt.t_update, "Retraining interval seconds")->capture_default_str();
    rep->add_option("--eval-window", opt.eval_window, "Classification window seconds")->capture_default_str();
    rep->add_option("--handling", opt.handling, "drop or record")->capture_default_str();
    rep->add_option("--model-drop", opt.model_drop, "Ship models through this file");
    rep->add_option("--top-ports", opt.top_ports, "Ports listed before 'others' (0 = all)")->capture_default_str();
    rep->add_option("--timing", opt.timing, "Record training wall time: on or off")->capture_default_str();
    rep->add_option("--out", opt.out_dir, "Report directory")->capture_default_str();
    add_model(rep, opt);
    add_net(rep, opt);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario");
    gen->add_option("--preset", opt.preset, "separable or shift")->capture_default_str();
    gen->add_option("--scenario-seed", opt.scenario_seed, "Generator seed")->capture_default_str();
    gen->add_option("--duration", opt.duration, "Override the preset duration (seconds)");
    gen->add_option("--hosts", opt.hosts, "Hosts per class");
    gen->add_option("--pcap", opt.pcap_out, "Also write a pcap file here");
    gen->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    add_net(gen, opt);

    auto* report = app.add_subcommand("report", "Re-emit report files from report.json");
    report->add_option("--report", opt.report, "Saved report.json");
    report->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        apply_config(opt);
        if (ingest->parsed()) return cmd_ingest(opt);
        if (train->parsed()) return cmd_train(opt);
        if (rep->parsed()) return cmd_replay(opt);
        if (gen->parsed()) return cmd_gen(opt);
        if (report->parsed()) return cmd_report(opt);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::IoError ? 1 : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
