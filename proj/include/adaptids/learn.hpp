#pragma once

#include "adaptids/featurize.hpp"
#include "adaptids/tree.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace adaptids {

enum class AlgorithmKind : std::uint8_t {
    KNN = 1,
    DecisionTree = 2,
    RandomForest = 3,
    GBDT = 4,
};

std::string_view to_string(AlgorithmKind kind) noexcept;
std::optional<AlgorithmKind> parse_algorithm(std::string_view name) noexcept;

/// Hyperparameters; defaults mirror the common library defaults
/// (k = 5 neighbours, 100 trees, sqrt(9) = 3 features per split).
struct AlgorithmSpec {
    AlgorithmKind kind = AlgorithmKind::DecisionTree;

    std::uint32_t knn_k = 5;

    std::uint32_t dt_max_depth = 0;  // 0 = unlimited

    std::uint32_t rf_trees = 100;
    std::uint32_t rf_max_features = 3;
    bool rf_bootstrap = true;

    std::uint32_t gbdt_stages = 100;
    double gbdt_learning_rate = 0.1;
    std::uint32_t gbdt_max_depth = 3;

    /// When set, the majority class is downsampled to at most
    /// ratio * minority rows before fitting. Off by default.
    std::optional<double> balance_ratio;

    std::uint64_t rng_seed = 0;

    friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

struct KnnModel {
    std::uint32_t k = 5;
    FeatureMatrix points;
    std::vector<Label> labels;
    friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

struct TreeModel {
    Tree tree;
    friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

struct ForestModel {
    std::vector<Tree> trees;
    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct BoostedModel {
    double init = 0.0;  ///< prior log-odds
    double learning_rate = 0.1;
    std::vector<Tree> stages;
    friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

/// Emitted when the training data holds a single class.
struct ConstantModel {
    Label label = Label::Benign;
    friend bool operator==(const ConstantModel&, const ConstantModel&) = default;
};

using ModelPayload = std::variant<ConstantModel, KnnModel, TreeModel, ForestModel, BoostedModel>;

struct Prediction {
    Label label = Label::Benign;
    double score = 0.0;  ///< malicious-ness in [0, 1]
};

/// Fits the algorithm on raw features (no scaling). Throws
/// Error(EmptyDataset) when x has no rows.
ModelPayload fit(const AlgorithmSpec& spec, const FeatureMatrix& x, std::span<const Label> y);

Prediction evaluate(const ModelPayload& payload, std::span<const double> x);

/// A trained classifier plus the provenance needed to ship and audit it.
/// Immutable once built; predict is pure.
struct DetectionModel {
    AlgorithmSpec algorithm;
    std::uint64_t schema_hash = kSchemaHash;
    double trained_at = 0.0;
    TimeWindow train_window;
    std::uint64_t benign_rows = 0;
    std::uint64_t malicious_rows = 0;
    ModelPayload payload;

    bool is_constant() const noexcept { return std::holds_alternative<ConstantModel>(payload); }

    friend bool operator==(const DetectionModel&, const DetectionModel&) = default;
};

/// Throws Error(SchemaMismatch) if v was encoded under a different schema.
Prediction predict(const DetectionModel& m, const FeatureVector& v);

struct TrainResult {
    DetectionModel model;
    double train_seconds = 0.0;  ///< wall clock, excluded from the model itself
    bool single_class = false;
};

/// trained_at defaults to the end of the dataset window.
TrainResult train(const AlgorithmSpec& spec, const LabeledDataset& ds, std::optional<double> trained_at = {});

} // namespace adaptids
