#include "adaptids/learn.hpp"
#include "adaptids/model_io.hpp"
#include "adaptids/scenario.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <zlib.h>

#include <cstring>

using namespace testing;

namespace {

constexpr std::size_t kPayloadOffset = 4 + 2 + 1 + 8 + 8 + 4;

DetectionModel trained(AlgorithmKind kind, std::uint64_t seed = 1) {
    AlgorithmSpec spec;
    spec.kind = kind;
    spec.rng_seed = seed;
    if (kind == AlgorithmKind::RandomForest) spec.rf_trees = 20;
    if (kind == AlgorithmKind::GBDT) spec.gbdt_stages = 20;
    auto ds = synthetic_dataset(300, seed);
    ds.window = {3600, 7200};
    return train(spec, ds).model;
}

void reseal(std::vector<std::byte>& bytes) {
    const auto body = bytes.size() - 4;
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
    for (int i = 0; i < 4; ++i) bytes[body + i] = std::byte((crc >> (8 * i)) & 0xFF);
}

ErrorCode code_of(std::span<const std::byte> bytes, std::optional<std::uint64_t> schema = std::nullopt) {
    try {
        deserialize_model(bytes, schema);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

} // namespace

TEST_CASE("round trip preserves every model kind and its predictions") {
    std::mt19937_64 rng(9);
    std::vector<DetectionModel> models;
    for (auto kind : {AlgorithmKind::KNN, AlgorithmKind::DecisionTree, AlgorithmKind::RandomForest, AlgorithmKind::GBDT})
        models.push_back(trained(kind));
    DetectionModel constant;
    constant.payload = ConstantModel{Label::Malicious};
    constant.algorithm.kind = AlgorithmKind::RandomForest;
    models.push_back(constant);
    auto balanced = trained(AlgorithmKind::DecisionTree);
    balanced.algorithm.balance_ratio = 1.5;
    models.push_back(balanced);

    for (const auto& m : models) {
        const auto bytes = serialize_model(m);
        const auto back = deserialize_model(bytes, kSchemaHash);
        CHECK(back == m);
        CHECK(serialize_model(back) == bytes);
        for (int i = 0; i < 1000; ++i) {
            FeatureVector v;
            for (auto& x : v.values) x = uniform01(rng) * 2000.0;
            const auto a = predict(m, v);
            const auto b = predict(back, v);
            CHECK(a.label == b.label);
            CHECK(a.score == b.score);
        }
    }
}

TEST_CASE("header layout") {
    const auto m = trained(AlgorithmKind::DecisionTree);
    const auto bytes = serialize_model(m);
    CHECK(std::memcmp(bytes.data(), "SADM", 4) == 0);
    CHECK(bytes[4] == std::byte{1});
    CHECK(bytes[5] == std::byte{0});
    CHECK(bytes[6] == std::byte{2});
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 23, 4);
    CHECK(len == bytes.size() - kPayloadOffset - 4);
}

TEST_CASE("flipping any payload byte is detected") {
    const auto bytes = serialize_model(trained(AlgorithmKind::GBDT));
    for (std::size_t i = kPayloadOffset; i < bytes.size(); i += 7) {
        auto bad = bytes;
        bad[i] ^= std::byte{0x5A};
        CHECK(code_of(bad) == ErrorCode::CorruptPayload);
    }
}

TEST_CASE("version 999 is unsupported") {
    auto bytes = serialize_model(trained(AlgorithmKind::KNN));
    bytes[4] = std::byte{999 & 0xFF};
    bytes[5] = std::byte{999 >> 8};
    CHECK(code_of(bytes) == ErrorCode::UnsupportedVersion);
    reseal(bytes);
    CHECK(code_of(bytes) == ErrorCode::UnsupportedVersion);
}

TEST_CASE("bad magic, truncation and schema mismatch") {
    auto bytes = serialize_model(trained(AlgorithmKind::DecisionTree));
    auto bad = bytes;
    bad[0] = std::byte{'X'};
    CHECK(code_of(bad) == ErrorCode::BadMagic);
    CHECK(code_of(std::span<const std::byte>(bytes.data(), 2)) == ErrorCode::BadMagic);
    CHECK(code_of(std::span<const std::byte>(bytes.data(), 10)) == ErrorCode::CorruptPayload);
    CHECK(code_of(std::span<const std::byte>(bytes.data(), bytes.size() - 1)) == ErrorCode::CorruptPayload);
    CHECK(code_of(bytes, kSchemaHash + 1) == ErrorCode::SchemaMismatch);
    CHECK_NOTHROW(deserialize_model(bytes));
}

TEST_CASE("structurally invalid payloads are rejected even with a valid checksum") {
    const auto m = trained(AlgorithmKind::DecisionTree);
    auto bytes = serialize_model(m);
    auto bad_algo = bytes;
    bad_algo[6] = std::byte{9};
    reseal(bad_algo);
    CHECK(code_of(bad_algo) == ErrorCode::CorruptPayload);

    auto bad_len = bytes;
    bad_len[23] = std::byte(std::to_integer<unsigned>(bad_len[23]) + 1);
    reseal(bad_len);
    CHECK(code_of(bad_len) == ErrorCode::CorruptPayload);

    // Trailing garbage inside the payload.
    auto longer = bytes;
    longer.insert(longer.end() - 4, std::byte{0});
    std::uint32_t len = 0;
    std::memcpy(&len, longer.data() + 23, 4);
    ++len;
    std::memcpy(longer.data() + 23, &len, 4);
    reseal(longer);
    CHECK(code_of(longer) == ErrorCode::CorruptPayload);
}

TEST_CASE("save and load through a file") {
    TempDir dir("model");
    const auto m = trained(AlgorithmKind::RandomForest, 5);
    save_model(dir / "m.sadm", m);
    CHECK(load_model(dir / "m.sadm", kSchemaHash) == m);
    CHECK_THROWS_AS(load_model(dir / "absent.sadm"), Error);
}
