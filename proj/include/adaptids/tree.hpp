#pragma once

#include "adaptids/core.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace adaptids {

/// Dense row-major matrix of float64 features.
struct FeatureMatrix {
    std::size_t cols = 0;
    std::vector<double> data;

    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t columns) : cols(columns) {}

    std::size_t rows() const noexcept { return cols == 0 ? 0 : data.size() / cols; }
    double at(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }
    void push_row(std::span<const double> values);

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;  ///< rows with value <= threshold go left
    double gain = 0.0;       ///< Gini impurity decrease within the node
};

/// Exhaustive CART split search over the given rows and candidate features.
/// Thresholds are midpoints between consecutive distinct values; ties go to
/// the lower feature index, then the lower threshold. nullopt means no
/// feature has two distinct values among the rows.
std::optional<Split> best_split(const FeatureMatrix& x, std::span<const Label> y,
                                std::span<const std::size_t> rows, std::span<const std::size_t> features);

struct TreeNode {
    std::int32_t feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;  ///< leaf: malicious fraction (classification) or output (regression)

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat binary tree; node 0 is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> x) const;
    double evaluate(std::span<const double> x) const { return leaf_for(x).value; }

    friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeParams {
    std::size_t max_depth = 0;     ///< 0 = unlimited
    std::size_t max_features = 0;  ///< features examined per node; 0 = all
};

/// Gini classification tree. weights[i] is the integer multiplicity of row i
/// (bootstrap counts; 0 excludes the row). rng is only consulted when
/// max_features is below the column count.
Tree grow_classification_tree(const FeatureMatrix& x, std::span<const Label> y,
                              std::span<const std::uint32_t> weights, const TreeParams& params,
                              std::mt19937_64* rng = nullptr);

/// Least-squares regression tree on target; leaf value is
/// sum(target) / sum(hessian) over the leaf's rows (a Newton step).
Tree grow_regression_tree(const FeatureMatrix& x, std::span<const double> target,
                          std::span<const double> hessian, const TreeParams& params);

} // namespace adaptids
