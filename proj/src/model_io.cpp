#include "adaptids/model_io.hpp"

#include "adaptids/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace adaptids {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'D', 'M'};
constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 8 + 8 + 4;
constexpr std::size_t kTrailerSize = 4;

enum PayloadTag : std::uint8_t { kConstant = 0, kKnn = 1, kTree = 2, kForest = 3, kBoosted = 4 };

std::uint32_t crc32_of(std::span<const std::byte> bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

class Encoder {
public:
    std::vector<std::byte> bytes;

    void u8(std::uint8_t v) { bytes.push_back(std::byte(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void tree(const Tree& t) {
        u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            i32(n.feature);
            f64(n.threshold);
            u32(n.left);
            u32(n.right);
            f64(n.value);
        }
    }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) bytes.push_back(std::byte((v >> (8 * i)) & 0xFF));
    }
};

class Decoder {
public:
    explicit Decoder(std::span<const std::byte> b) : bytes_(b) {}

    bool done() const { return pos_ == bytes_.size(); }

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    Tree tree() {
        Tree t;
        const std::uint32_t count = u32();
        need(std::size_t{count} * 28);
        if (count == 0) fail("tree without nodes");
        t.nodes.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            auto& n = t.nodes[i];
            n.feature = i32();
            n.threshold = f64();
            n.left = u32();
            n.right = u32();
            n.value = f64();
            if (!n.is_leaf()) {
                // Children always follow their parent, which rules out cycles.
                if (n.feature >= static_cast<std::int32_t>(kFeatureCount) || n.left <= i || n.right <= i ||
                    n.left >= count || n.right >= count)
                    fail("invalid tree node");
            }
        }
        return t;
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) fail("payload truncated");
    }

    [[noreturn]] static void fail(const std::string& why) { throw Error(ErrorCode::CorruptPayload, why); }

private:
    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

void encode_payload(Encoder& e, const DetectionModel& m) {
    const auto& s = m.algorithm;
    e.u32(s.knn_k);
    e.u32(s.dt_max_depth);
    e.u32(s.rf_trees);
    e.u32(s.rf_max_features);
    e.u8(s.rf_bootstrap ? 1 : 0);
    e.u32(s.gbdt_stages);
    e.f64(s.gbdt_learning_rate);
    e.u32(s.gbdt_max_depth);
    e.u8(s.balance_ratio ? 1 : 0);
    e.f64(s.balance_ratio.value_or(0.0));
    e.u64(s.rng_seed);
    e.f64(m.train_window.start);
    e.f64(m.train_window.end);
    e.u64(m.benign_rows);
    e.u64(m.malicious_rows);

    struct Visitor {
        Encoder& e;
        void operator()(const ConstantModel& c) const {
            e.u8(kConstant);
            e.u8(static_cast<std::uint8_t>(c.label));
        }
        void operator()(const KnnModel& k) const {
            e.u8(kKnn);
            e.u32(k.k);
            e.u32(static_cast<std::uint32_t>(k.points.cols));
            e.u32(static_cast<std::uint32_t>(k.points.rows()));
            for (double v : k.points.data) e.f64(v);
            for (auto l : k.labels) e.u8(static_cast<std::uint8_t>(l));
        }
        void operator()(const TreeModel& t) const {
            e.u8(kTree);
            e.tree(t.tree);
        }
        void operator()(const ForestModel& f) const {
            e.u8(kForest);
            e.u32(static_cast<std::uint32_t>(f.trees.size()));
            for (const auto& t : f.trees) e.tree(t);
        }
        void operator()(const BoostedModel& b) const {
            e.u8(kBoosted);
            e.f64(b.init);
            e.f64(b.learning_rate);
            e.u32(static_cast<std::uint32_t>(b.stages.size()));
            for (const auto& t : b.stages) e.tree(t);
        }
    };
    std::visit(Visitor{e}, m.payload);
}

Label decode_label(std::uint8_t v) {
    if (v > 1) Decoder::fail("invalid label");
    return static_cast<Label>(v);
}

void decode_payload(Decoder& d, DetectionModel& m) {
    auto& s = m.algorithm;
    s.knn_k = d.u32();
    s.dt_max_depth = d.u32();
    s.rf_trees = d.u32();
    s.rf_max_features = d.u32();
    s.rf_bootstrap = d.u8() != 0;
    s.gbdt_stages = d.u32();
    s.gbdt_learning_rate = d.f64();
    s.gbdt_max_depth = d.u32();
    const bool balanced = d.u8() != 0;
    const double ratio = d.f64();
    if (balanced) s.balance_ratio = ratio;
    s.rng_seed = d.u64();
    m.train_window.start = d.f64();
    m.train_window.end = d.f64();
    m.benign_rows = d.u64();
    m.malicious_rows = d.u64();

    switch (d.u8()) {
    case kConstant: m.payload = ConstantModel{decode_label(d.u8())}; break;
    case kKnn: {
        KnnModel k;
        k.k = d.u32();
        k.points.cols = d.u32();
        const std::uint32_t rows = d.u32();
        if (k.points.cols != kFeatureCount) Decoder::fail("unexpected feature count");
        d.need(std::size_t{rows} * k.points.cols * 8 + rows);
        k.points.data.resize(std::size_t{rows} * k.points.cols);
        for (auto& v : k.points.data) v = d.f64();
        k.labels.resize(rows);
        for (auto& l : k.labels) l = decode_label(d.u8());
        m.payload = std::move(k);
        break;
    }
    case kTree: m.payload = TreeModel{d.tree()}; break;
    case kForest: {
        ForestModel f;
        const std::uint32_t n = d.u32();
        d.need(std::size_t{n} * 4);
        f.trees.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) f.trees.push_back(d.tree());
        m.payload = std::move(f);
        break;
    }
    case kBoosted: {
        BoostedModel b;
        b.init = d.f64();
        b.learning_rate = d.f64();
        const std::uint32_t n = d.u32();
        d.need(std::size_t{n} * 4);
        b.stages.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) b.stages.push_back(d.tree());
        m.payload = std::move(b);
        break;
    }
    default: Decoder::fail("unknown payload tag");
    }
    if (!d.done()) Decoder::fail("trailing bytes in payload");
}

} // namespace

std::vector<std::byte> serialize_model(const DetectionModel& m) {
    Encoder payload;
    encode_payload(payload, m);

    Encoder out;
    for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
    out.u16(kModelFormatVersion);
    out.u8(static_cast<std::uint8_t>(m.algorithm.kind));
    out.u64(m.schema_hash);
    out.f64(m.trained_at);
    out.u32(static_cast<std::uint32_t>(payload.bytes.size()));
    out.bytes.insert(out.bytes.end(), payload.bytes.begin(), payload.bytes.end());
    out.u32(crc32_of(out.bytes));
    return std::move(out.bytes);
}

DetectionModel deserialize_model(std::span<const std::byte> bytes, std::optional<std::uint64_t> expected_schema) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::BadMagic, "not a model file");
    if (bytes.size() < kHeaderSize + kTrailerSize) throw Error(ErrorCode::CorruptPayload, "model file truncated");

    Decoder header(bytes.subspan(4, kHeaderSize - 4));
    const std::uint16_t version = header.u16();
    if (version != kModelFormatVersion)
        throw Error(ErrorCode::UnsupportedVersion, "model format version " + std::to_string(version));

    const auto body = bytes.first(bytes.size() - kTrailerSize);
    Decoder trailer(bytes.last(kTrailerSize));
    if (trailer.u32() != crc32_of(body)) throw Error(ErrorCode::CorruptPayload, "checksum mismatch");

    const std::uint8_t algo = header.u8();
    DetectionModel m;
    m.schema_hash = header.u64();
    m.trained_at = header.f64();
    const std::uint32_t payload_len = header.u32();
    if (payload_len != body.size() - kHeaderSize) throw Error(ErrorCode::CorruptPayload, "payload length mismatch");
    if (algo < 1 || algo > 4) throw Error(ErrorCode::CorruptPayload, "unknown algorithm id");
    m.algorithm.kind = static_cast<AlgorithmKind>(algo);
    if (expected_schema && *expected_schema != m.schema_hash)
        throw Error(ErrorCode::SchemaMismatch, "model schema differs from the active feature schema");

    Decoder payload(body.subspan(kHeaderSize));
    decode_payload(payload, m);
    return m;
}

void save_model(const std::filesystem::path& path, const DetectionModel& m) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

DetectionModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(std::as_bytes(std::span<const char>(raw)), expected_schema);
}

} // namespace adaptids
