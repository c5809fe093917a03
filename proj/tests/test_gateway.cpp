#include "adaptids/gateway.hpp"
#include "adaptids/scenario.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace testing;

namespace {

std::shared_ptr<const DetectionModel> constant(Label label, double trained_at = 0.0) {
    DetectionModel m;
    m.payload = ConstantModel{label};
    m.trained_at = trained_at;
    return std::make_shared<const DetectionModel>(m);
}

// A one-split tree over in_dst_port: ports <= threshold are malicious.
std::shared_ptr<const DetectionModel> port_rule(double threshold, double trained_at) {
    DetectionModel m;
    Tree t;
    t.nodes.push_back({4, threshold, 1, 2, 0.0});
    t.nodes.push_back({-1, 0.0, 0, 0, 1.0});
    t.nodes.push_back({-1, 0.0, 0, 0, 0.0});
    m.payload = TreeModel{t};
    m.trained_at = trained_at;
    return std::make_shared<const DetectionModel>(m);
}

} // namespace

TEST_CASE("observe accumulates per remote host") {
    Gateway gw(home_net(), 3600);
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10"));
    gw.observe(pkt(2, "192.168.1.10", "8.8.8.8"));
    gw.observe(pkt(3, "8.8.8.8", "192.168.1.20"));
    gw.observe(pkt(4, "192.168.1.10", "192.168.1.20"));
    REQUIRE(gw.active_hosts() == 1);
    const auto* acc = gw.host_state({ip("8.8.8.8")});
    REQUIRE(acc);
    CHECK(acc->in_count() + acc->out_count() == 3);
    CHECK(gw.ignored_packets() == 1);
}

TEST_CASE("no model yet gives a deferred window") {
    Gateway gw(home_net(), 3600);
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10"));
    const auto out = gw.classify_active_hosts(3600);
    CHECK(out.deferred);
    CHECK(out.verdicts.empty());
    CHECK(out.active_hosts == 1);
    CHECK(gw.deferred_windows() == 1);
    CHECK(gw.active_hosts() == 0);
    CHECK(gw.current_window() == TimeWindow{3600, 7200});
}

TEST_CASE("constant malicious model flags hosts and counts repeats") {
    Gateway gw(home_net(), 3600);
    gw.swap_model(constant(Label::Malicious));
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10"));
    auto out = gw.classify_active_hosts(3600);
    REQUIRE(out.verdicts.size() == 1);
    CHECK(out.verdicts[0].label == Label::Malicious);
    CHECK(out.verdicts[0].packets == 1);
    const auto* e = gw.malicious_list().find(ip("8.8.8.8"));
    REQUIRE(e);
    CHECK(e->flag_count == 1);
    CHECK(e->first_flagged == 3600);

    gw.observe(pkt(3700, "8.8.8.8", "192.168.1.10"));
    gw.classify_active_hosts(7200);
    e = gw.malicious_list().find(ip("8.8.8.8"));
    CHECK(e->flag_count == 2);
    CHECK(e->first_flagged == 3600);
    CHECK(e->last_flagged == 7200);
}

TEST_CASE("handling policy verdicts") {
    MaliciousList list;
    const auto p = pkt(1, "8.8.8.8", "192.168.1.10");
    CHECK(apply_policy(p, list, HandlingPolicy::FilterDrop) == Verdict::Forward);
    list.flag(ip("8.8.8.8"), 0);
    CHECK(apply_policy(p, list, HandlingPolicy::FilterDrop) == Verdict::Drop);
    CHECK(apply_policy(p, list, HandlingPolicy::RecordAndPass) == Verdict::Mirror);
    const auto reply = pkt(2, "192.168.1.10", "8.8.8.8");
    CHECK(apply_policy(reply, list, HandlingPolicy::FilterDrop) == Verdict::Drop);
}

TEST_CASE("listed hosts are still observed under FilterDrop") {
    Gateway gw(home_net(), 3600, HandlingPolicy::FilterDrop);
    gw.swap_model(constant(Label::Malicious));
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10"));
    gw.classify_active_hosts(3600);
    CHECK(gw.observe(pkt(3601, "8.8.8.8", "192.168.1.10")) == Verdict::Drop);
    CHECK(gw.active_hosts() == 1);
    CHECK(gw.observe(pkt(3602, "1.1.1.1", "192.168.1.10")) == Verdict::Forward);
}

TEST_CASE("model swaps take effect at the next boundary") {
    Gateway gw(home_net(), 3600);
    gw.swap_model(port_rule(100, 1));
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10", 1, 23));
    auto w1 = gw.classify_active_hosts(3600);
    CHECK(w1.model_trained_at == 1.0);
    CHECK(w1.verdicts[0].label == Label::Malicious);

    gw.observe(pkt(3601, "8.8.8.8", "192.168.1.10", 1, 23));
    gw.swap_model(port_rule(10, 2));
    gw.swap_model(port_rule(50, 3));  // only the latest applies
    auto w2 = gw.classify_active_hosts(7200);
    CHECK(w2.model_trained_at == 3.0);
    CHECK(w2.verdicts[0].label == Label::Malicious);

    gw.observe(pkt(7201, "8.8.8.8", "192.168.1.10", 1, 23));
    gw.swap_model(port_rule(10, 4));
    auto w3 = gw.classify_active_hosts(10800);
    CHECK(w3.verdicts[0].label == Label::Benign);
}

TEST_CASE("swapping in an identical model leaves verdicts unchanged") {
    auto run = [](bool reswap) {
        Gateway gw(home_net(), 3600);
        auto m = port_rule(100, 1);
        gw.swap_model(m);
        std::vector<Label> labels;
        for (int h = 0; h < 3; ++h) {
            gw.observe(pkt(h * 3600 + 1, "8.8.8.8", "192.168.1.10", 1, static_cast<std::uint16_t>(50 + h * 40)));
            if (reswap) gw.swap_model(std::make_shared<const DetectionModel>(*m));
            labels.push_back(gw.classify_active_hosts((h + 1) * 3600.0).verdicts[0].label);
        }
        return std::make_pair(labels, gw.malicious_list());
    };
    CHECK(run(false) == run(true));
}

TEST_CASE("schema mismatch is rejected") {
    Gateway gw(home_net(), 3600);
    DetectionModel m;
    m.schema_hash = 42;
    try {
        gw.swap_model(std::make_shared<const DetectionModel>(m));
        FAIL("expected SchemaMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaMismatch);
    }
    CHECK_THROWS_AS(Gateway(home_net(), 0), Error);
}

TEST_CASE("gateway pulls models from an attached channel") {
    InProcessChannel ch;
    Gateway gw(home_net(), 3600);
    gw.attach(ch);
    gw.observe(pkt(1, "8.8.8.8", "192.168.1.10"));
    CHECK(gw.classify_active_hosts(3600).deferred);
    ch.publish(*constant(Label::Malicious, 3600));
    gw.observe(pkt(3601, "8.8.8.8", "192.168.1.10"));
    auto out = gw.classify_active_hosts(7200);
    CHECK_FALSE(out.deferred);
    CHECK(out.model_trained_at == 3600);
}

TEST_CASE("constant benign model keeps the list empty and forwards everything") {
    const auto sc = generate_synthetic(separable_scenario(2, 7200, 3));
    for (auto policy : {HandlingPolicy::FilterDrop, HandlingPolicy::RecordAndPass}) {
        Gateway gw(sc.net, 3600, policy);
        gw.swap_model(constant(Label::Benign));
        for (const auto& p : sc.packets) {
            while (p.ts >= gw.current_window().end) gw.classify_active_hosts(gw.current_window().end);
            CHECK(gw.observe(p) == Verdict::Forward);
        }
        CHECK(gw.malicious_list().size() == 0);
    }
}

TEST_CASE("identical input yields identical list state; entries are never removed") {
    const auto sc = generate_synthetic(separable_scenario(4, 4 * 3600.0, 3));
    auto run = [&] {
        Gateway gw(sc.net, 1800);
        gw.swap_model(port_rule(100, 0));
        std::size_t last_size = 0;
        bool monotone = true;
        for (const auto& p : sc.packets) {
            while (p.ts >= gw.current_window().end) {
                gw.classify_active_hosts(gw.current_window().end);
                monotone = monotone && gw.malicious_list().size() >= last_size;
                last_size = gw.malicious_list().size();
            }
            gw.observe(p);
        }
        CHECK(monotone);
        return gw.malicious_list();
    };
    const auto a = run();
    CHECK(a.size() == 3);
    CHECK(a == run());
    std::ostringstream csv;
    a.write_csv(csv);
    CHECK(csv.str().rfind("addr,first_flagged,last_flagged,flag_count\n", 0) == 0);
}
