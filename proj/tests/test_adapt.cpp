#include "adaptids/adapt.hpp"
#include "adaptids/model_io.hpp"
#include "adaptids/scenario.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

using namespace testing;

namespace {

UpdatePolicy dum(double d, double u) {
    return {UpdateMethod::DUM, d, u};
}

void fill(TrafficStore& store, const std::vector<PacketRecord>& recs, const NetConfig& cfg) {
    for (const auto& p : recs) {
        if (auto d = direction_of(p, cfg)) store.append(p, *d, remote_host(p, *d));
    }
}

Scenario small_scenario(double hours) {
    auto cfg = separable_scenario(3, hours * 3600.0, 2);
    return generate_synthetic(cfg);
}

std::vector<double> hourly_clock(int hours) {
    std::vector<double> c;
    for (int h = 1; h <= hours; ++h) c.push_back(h * 3600.0);
    return c;
}

} // namespace

TEST_CASE("training window examples") {
    CHECK(training_window(dum(3600, 3600), 10800) == TimeWindow{7200, 10800});
    CHECK(training_window(dum(7200, 3600), 18000) == TimeWindow{10800, 18000});
    CHECK(training_window(dum(kInfiniteDuration, 3600), 18000) == TimeWindow{0, 18000});
    CHECK(training_window(dum(7200, 3600), 3600) == TimeWindow{0, 3600});
    CHECK_FALSE(training_window(dum(3600, 3600), 5000));
    CHECK_FALSE(training_window(dum(3600, 3600), 0));
    const UpdatePolicy scm{UpdateMethod::SCM, 3600, 0};
    CHECK(training_window(scm, 3600) == TimeWindow{0, 3600});
    CHECK_FALSE(training_window(scm, 7200));
    CHECK_FALSE(training_window(scm, 1800));
}

TEST_CASE("training window matches the enumerated schedule") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 2000; ++i) {
        UpdatePolicy p;
        p.kind = uniform01(rng) < 0.2 ? UpdateMethod::SCM : UpdateMethod::DUM;
        p.t_update = static_cast<double>(1 + uniform_index(rng, 6)) * 600.0;
        p.t_duration = uniform01(rng) < 0.2 && p.kind == UpdateMethod::DUM
                           ? kInfiniteDuration
                           : static_cast<double>(1 + uniform_index(rng, 8)) * 900.0;
        const double t = uniform01(rng) < 0.6 ? static_cast<double>(uniform_index(rng, 20)) * p.t_update
                                              : std::floor(uniform01(rng) * 20000.0);
        CHECK(training_window(p, t) == oracle::training_window(p, t));
    }
}

TEST_CASE("consecutive DUM windows overlap by max(0, D - U)") {
    for (double d : {1800.0, 3600.0, 7200.0, 14400.0})
        for (double u : {1800.0, 3600.0}) {
            const auto p = dum(d, u);
            for (std::uint64_t k = 1; k < 20; ++k) {
                const double t = update_time(p, k);
                const auto w = *training_window(p, t);
                CHECK(w.duration() == std::min(t, d));
                const auto next = *training_window(p, update_time(p, k + 1));
                CHECK(std::max(0.0, w.end - next.start) == std::min(std::max(0.0, d - u), w.duration()));
            }
        }
}

TEST_CASE("policy validation") {
    CHECK_NOTHROW(dum(3600, 3600).validate());
    CHECK_THROWS_AS(dum(0, 3600).validate(), Error);
    CHECK_THROWS_AS(dum(3600, 0).validate(), Error);
    CHECK_THROWS_AS((UpdatePolicy{UpdateMethod::SCM, kInfiniteDuration, 3600}.validate()), Error);
    CHECK_NOTHROW((UpdatePolicy{UpdateMethod::SCM, 3600, 0}.validate()));
}

TEST_CASE("SCM over five hours fires once") {
    const auto sc = small_scenario(5);
    TrafficStore store;
    fill(store, sc.packets, sc.net);
    InProcessChannel ch;
    const auto clock = hourly_clock(5);
    const auto log = run_updater(store, {UpdateMethod::SCM, 3600, 3600}, {}, sc.net, ch, clock);
    REQUIRE(log.size() == 1);
    CHECK(log[0].t == 3600);
    CHECK(log[0].window == TimeWindow{0, 3600});
    CHECK(log[0].published);
    CHECK(ch.latest()->trained_at == 3600);
}

TEST_CASE("DUM 1h/1h over five hours fires hourly") {
    const auto sc = small_scenario(5);
    TrafficStore store;
    fill(store, sc.packets, sc.net);
    InProcessChannel ch;
    std::vector<double> clock;
    for (double t = 0; t <= 5 * 3600.0; t += 450.0) clock.push_back(t);
    const auto log = run_updater(store, dum(3600, 3600), {}, sc.net, ch, clock);
    REQUIRE(log.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(log[k].t == 3600.0 * (k + 1));
        CHECK(log[k].published);
        CHECK(log[k].benign_rows == 2);
        CHECK(log[k].malicious_rows == 2);
    }
    CHECK(ch.latest()->trained_at == 18000);
}

TEST_CASE("an hour without labeled hosts keeps the previous model") {
    auto sc = small_scenario(4);
    // Drop everything in hour 3 except traffic to an unmonitored local host.
    std::vector<PacketRecord> recs;
    for (const auto& p : sc.packets)
        if (!TimeWindow{7200, 10800}.contains(p.ts)) recs.push_back(p);
    recs.push_back(pkt(8000, "9.9.9.9", "192.168.1.99"));
    std::stable_sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.ts < b.ts; });
    TrafficStore store;
    fill(store, recs, sc.net);
    InProcessChannel ch;
    ModelUpdater up(store, dum(3600, 3600), {}, sc.net, ch);
    up.advance_to(7200);
    REQUIRE(up.log().size() == 2);
    const auto before = ch.latest();
    CHECK(before->trained_at == 7200);
    up.advance_to(10800);
    REQUIRE(up.log().size() == 3);
    CHECK_FALSE(up.log()[2].published);
    CHECK(up.log()[2].note == "empty_window");
    CHECK(ch.latest() == before);
    up.advance_to(14400);
    CHECK(up.log()[3].published);
    CHECK(ch.latest()->trained_at == 14400);
}

TEST_CASE("single-class windows are retained or published by option") {
    const auto cfg = home_net();
    std::vector<PacketRecord> recs{pkt(10, "5.5.5.5", "192.168.1.200", 1, 23), pkt(20, "6.6.6.6", "192.168.1.10", 443, 5000),
                                   pkt(3700, "5.5.5.5", "192.168.1.200", 1, 23)};
    for (bool retain : {true, false}) {
        TrafficStore store;
        fill(store, recs, cfg);
        InProcessChannel ch;
        ModelUpdater up(store, dum(3600, 3600), {}, cfg, ch, {retain, false});
        up.advance_to(7200);
        REQUIRE(up.log().size() == 2);
        CHECK(up.log()[1].train_seconds == 0.0);
        if (retain) {
            CHECK(up.log()[1].note == "single_class");
            CHECK_FALSE(ch.latest()->is_constant());
        } else {
            CHECK(up.log()[1].published);
            CHECK(ch.latest()->is_constant());
        }
    }
}

TEST_CASE("eviction keeps every record a future window needs") {
    const auto sc = small_scenario(8);
    for (auto policy : {dum(7200, 3600), dum(3600, 1800), dum(5400, 3600)}) {
        TrafficStore store;
        fill(store, sc.packets, sc.net);
        InProcessChannel ch;
        ModelUpdater up(store, policy, {}, sc.net, ch);
        for (std::uint64_t k = 1; update_time(policy, k) <= 8 * 3600.0; ++k) {
            up.advance_to(update_time(policy, k));
            const auto next = *training_window(policy, update_time(policy, k + 1));
            CHECK(store.horizon() <= next.start);
        }
        for (const auto& e : up.log()) CHECK(e.note.empty());
    }
    TrafficStore store;
    fill(store, sc.packets, sc.net);
    const auto size = store.size();
    InProcessChannel ch;
    run_updater(store, dum(kInfiniteDuration, 3600), {}, sc.net, ch, hourly_clock(8));
    CHECK(store.size() == size);
    CHECK(store.horizon() == 0.0);
}

TEST_CASE("DUM publishes at most floor(total / t_update) times") {
    const auto sc = small_scenario(5);
    for (double u : {1800.0, 3600.0, 5000.0}) {
        TrafficStore store;
        fill(store, sc.packets, sc.net);
        InProcessChannel ch;
        const std::vector<double> clock{5 * 3600.0};
        const auto log = run_updater(store, dum(3600, u), {}, sc.net, ch, clock);
        std::size_t published = 0;
        for (const auto& e : log) published += e.published;
        CHECK(published <= static_cast<std::size_t>(std::floor(5 * 3600.0 / u)));
        CHECK(log.size() == static_cast<std::size_t>(std::floor(5 * 3600.0 / u)));
    }
}

TEST_CASE("channels: last writer wins and empty before publish") {
    TempDir dir("chan");
    auto ds = synthetic_dataset(60, 1);
    ds.window = {0, 3600};
    const auto m1 = train({}, ds).model;
    ds.window = {3600, 7200};
    const auto m2 = train({}, ds).model;

    InProcessChannel mem;
    FileDropChannel file(dir / "sub" / "model.sadm");
    for (ModelChannel* ch : {static_cast<ModelChannel*>(&mem), static_cast<ModelChannel*>(&file)}) {
        CHECK(ch->latest() == nullptr);
        ch->publish(m1);
        CHECK(*ch->latest() == m1);
        ch->publish(m2);
        CHECK(*ch->latest() == m2);
    }
    // No temp files are left behind.
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "sub")) ++entries;
    CHECK(entries == 1);
}

TEST_CASE("file-drop readers never observe a torn model") {
    TempDir dir("torn");
    std::vector<DetectionModel> models;
    for (std::uint64_t s = 1; s <= 2; ++s) {
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::RandomForest;
        spec.rf_trees = 30;
        spec.rng_seed = s;
        auto ds = synthetic_dataset(400, s);
        models.push_back(train(spec, ds).model);
    }
    FileDropChannel writer(dir / "model.sadm");
    writer.publish(models[0]);

    std::atomic<bool> done{false};
    std::atomic<std::size_t> reads{0}, bad{0};
    std::vector<std::thread> readers;
    for (int r = 0; r < 3; ++r) {
        readers.emplace_back([&] {
            FileDropChannel reader(dir / "model.sadm");
            while (!done) {
                try {
                    auto m = reader.latest();
                    if (!m || !(*m == models[0] || *m == models[1])) ++bad;
                } catch (const Error&) {
                    ++bad;
                }
                ++reads;
            }
        });
    }
    for (int i = 0; i < 300; ++i) writer.publish(models[i % 2]);
    done = true;
    for (auto& t : readers) t.join();
    CHECK(reads > 0);
    CHECK(bad == 0);
}

TEST_CASE("update log serializes one object per line") {
    UpdateEvent e;
    e.t = 7200;
    e.window = {3600, 7200};
    e.benign_rows = 3;
    e.malicious_rows = 4;
    e.published = true;
    CHECK(to_ndjson(e) ==
          R"({"t":7200.0,"window_start":3600.0,"window_end":7200.0,"benign_rows":3,"malicious_rows":4,"train_seconds":0.0,"published":true,"note":""})");
    std::ostringstream out;
    const std::vector<UpdateEvent> log{e, e};
    write_update_log(out, log);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
