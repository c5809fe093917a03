#include "adaptids/learn.hpp"

#include "adaptids/error.hpp"
#include "adaptids/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace adaptids {

std::string_view to_string(AlgorithmKind kind) noexcept {
    switch (kind) {
    case AlgorithmKind::KNN: return "knn";
    case AlgorithmKind::DecisionTree: return "dt";
    case AlgorithmKind::RandomForest: return "rf";
    case AlgorithmKind::GBDT: return "gbdt";
    }
    return "unknown";
}

std::optional<AlgorithmKind> parse_algorithm(std::string_view name) noexcept {
    for (auto kind : {AlgorithmKind::KNN, AlgorithmKind::DecisionTree, AlgorithmKind::RandomForest, AlgorithmKind::GBDT}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Label majority(double malicious_fraction) {
    return malicious_fraction > 0.5 ? Label::Malicious : Label::Benign;
}

// Keeps every minority row and a seeded random subset of the majority.
std::vector<std::size_t> balanced_rows(std::span<const Label> y, double ratio, std::uint64_t seed) {
    std::vector<std::size_t> benign, malicious;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] == Label::Malicious ? malicious : benign).push_back(i);
    auto& minority = benign.size() <= malicious.size() ? benign : malicious;
    auto& majority = benign.size() <= malicious.size() ? malicious : benign;
    const auto cap = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(minority.size())));
    if (majority.size() > cap) {
        std::mt19937_64 rng(splitmix64(seed ^ 0xba1a9ceull));
        for (std::size_t i = 0; i < cap; ++i) {
            std::swap(majority[i], majority[i + uniform_index(rng, majority.size() - i)]);
        }
        majority.resize(cap);
    }
    std::vector<std::size_t> rows(minority);
    rows.insert(rows.end(), majority.begin(), majority.end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

KnnModel fit_knn(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    KnnModel m;
    m.k = std::max<std::uint32_t>(spec.knn_k, 1);
    m.points = x;
    m.labels.assign(y.begin(), y.end());
    return m;
}

Prediction predict_knn(const KnnModel& m, std::span<const double> q) {
    const std::size_t n = m.points.rows();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = m.points.row(i);
        double d = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double diff = row[c] - q[c];
            d += diff * diff;
        }
        dist[i] = {d, i};
    }
    const std::size_t k = std::min<std::size_t>(m.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t votes = 0;
    for (std::size_t i = 0; i < k; ++i) votes += m.labels[dist[i].second] == Label::Malicious;
    Prediction p;
    p.score = k == 0 ? 0.0 : static_cast<double>(votes) / static_cast<double>(k);
    p.label = 2 * votes > k ? Label::Malicious : Label::Benign;
    return p;
}

TreeModel fit_tree(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    TreeParams params;
    params.max_depth = spec.dt_max_depth;
    return TreeModel{grow_classification_tree(x, y, {}, params)};
}

ForestModel fit_forest(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    ForestModel forest;
    forest.trees.resize(spec.rf_trees);
    TreeParams params;
    params.max_features = spec.rf_max_features;

    auto grow = [&](std::size_t t) {
        std::mt19937_64 rng(splitmix64(spec.rng_seed ^ splitmix64(t + 1)));
        std::vector<std::uint32_t> weights(x.rows(), 1);
        if (spec.rf_bootstrap) {
            std::fill(weights.begin(), weights.end(), 0u);
            for (std::size_t i = 0; i < x.rows(); ++i) ++weights[uniform_index(rng, x.rows())];
        }
        forest.trees[t] = grow_classification_tree(x, y, weights, params, &rng);
    };

    // Each tree owns its seed and output slot, so the result does not depend
    // on the thread count.
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), forest.trees.size());
    if (workers <= 1) {
        for (std::size_t t = 0; t < forest.trees.size(); ++t) grow(t);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < forest.trees.size(); t += workers) grow(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

Prediction predict_forest(const ForestModel& m, std::span<const double> q) {
    std::size_t votes = 0;
    for (const auto& tree : m.trees) votes += majority(tree.evaluate(q)) == Label::Malicious;
    Prediction p;
    const std::size_t n = m.trees.size();
    p.score = n == 0 ? 0.0 : static_cast<double>(votes) / static_cast<double>(n);
    p.label = 2 * votes > n ? Label::Malicious : Label::Benign;
    return p;
}

BoostedModel fit_boosted(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    const std::size_t n = x.rows();
    std::vector<double> target(n), hessian(n), raw(n);
    double positives = 0.0;
    for (auto label : y) positives += label == Label::Malicious;
    const double prior = positives / static_cast<double>(n);

    BoostedModel m;
    m.init = std::log(prior / (1.0 - prior));
    m.learning_rate = spec.gbdt_learning_rate;
    std::fill(raw.begin(), raw.end(), m.init);

    TreeParams params;
    params.max_depth = spec.gbdt_max_depth;
    for (std::uint32_t stage = 0; stage < spec.gbdt_stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            target[i] = (y[i] == Label::Malicious ? 1.0 : 0.0) - p;
            hessian[i] = p * (1.0 - p);
        }
        Tree tree = grow_regression_tree(x, target, hessian, params);
        for (std::size_t i = 0; i < n; ++i) raw[i] += m.learning_rate * tree.evaluate(x.row(i));
        m.stages.push_back(std::move(tree));
    }
    return m;
}

Prediction predict_boosted(const BoostedModel& m, std::span<const double> q) {
    double raw = m.init;
    for (const auto& tree : m.stages) raw += m.learning_rate * tree.evaluate(q);
    Prediction p;
    p.score = sigmoid(raw);
    p.label = p.score >= 0.5 ? Label::Malicious : Label::Benign;
    return p;
}

} // namespace

ModelPayload fit(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    if (x.rows() == 0) throw Error(ErrorCode::EmptyDataset, "cannot train on zero rows");
    if (y.size() != x.rows()) throw Error(ErrorCode::LengthMismatch, "label count differs from row count");

    const bool single_class = std::all_of(y.begin(), y.end(), [&](Label l) { return l == y.front(); });
    if (single_class) return ConstantModel{y.front()};

    const FeatureMatrix* xs = &x;
    std::span<const Label> ys = y;
    FeatureMatrix balanced_x(x.cols);
    std::vector<Label> balanced_y;
    if (spec.balance_ratio && *spec.balance_ratio > 0.0) {
        for (auto r : balanced_rows(y, *spec.balance_ratio, spec.rng_seed)) {
            balanced_x.push_row(x.row(r));
            balanced_y.push_back(y[r]);
        }
        xs = &balanced_x;
        ys = balanced_y;
    }

    switch (spec.kind) {
    case AlgorithmKind::KNN: return fit_knn(spec, *xs, ys);
    case AlgorithmKind::DecisionTree: return fit_tree(spec, *xs, ys);
    case AlgorithmKind::RandomForest: return fit_forest(spec, *xs, ys);
    case AlgorithmKind::GBDT: return fit_boosted(spec, *xs, ys);
    }
    throw Error(ErrorCode::InvalidConfig, "unknown algorithm");
}

Prediction evaluate(const ModelPayload& payload, std::span<const double> x) {
    struct Visitor {
        std::span<const double> q;
        Prediction operator()(const ConstantModel& m) const {
            return {m.label, m.label == Label::Malicious ? 1.0 : 0.0};
        }
        Prediction operator()(const KnnModel& m) const { return predict_knn(m, q); }
        Prediction operator()(const TreeModel& m) const {
            const double frac = m.tree.evaluate(q);
            return {majority(frac), frac};
        }
        Prediction operator()(const ForestModel& m) const { return predict_forest(m, q); }
        Prediction operator()(const BoostedModel& m) const { return predict_boosted(m, q); }
    };
    return std::visit(Visitor{x}, payload);
}

Prediction predict(const DetectionModel& m, const FeatureVector& v) {
    if (v.schema_hash != m.schema_hash) throw Error(ErrorCode::SchemaMismatch, "feature vector schema differs from model");
    return evaluate(m.payload, v.values);
}

TrainResult train(const AlgorithmSpec& spec, const LabeledDataset& ds, std::optional<double> trained_at) {
    if (ds.rows.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    FeatureMatrix x(kFeatureCount);
    x.data.reserve(ds.rows.size() * kFeatureCount);
    std::vector<Label> y;
    y.reserve(ds.rows.size());
    const std::uint64_t schema = ds.rows.front().features.schema_hash;
    for (const auto& row : ds.rows) {
        if (row.features.schema_hash != schema) throw Error(ErrorCode::SchemaMismatch, "mixed schemas in dataset");
        x.push_row(row.features.values);
        y.push_back(row.label);
    }

    TrainResult result;
    auto& m = result.model;
    m.algorithm = spec;
    m.schema_hash = schema;
    m.trained_at = trained_at.value_or(ds.window.end);
    m.train_window = ds.window;
    m.benign_rows = ds.count(Label::Benign);
    m.malicious_rows = ds.count(Label::Malicious);

    const auto start = std::chrono::steady_clock::now();
    m.payload = fit(spec, x, y);
    result.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.single_class = m.benign_rows == 0 || m.malicious_rows == 0;
    return result;
}

} // namespace adaptids
