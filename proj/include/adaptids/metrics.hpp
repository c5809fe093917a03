#pragma once

#include "adaptids/core.hpp"

#include <cstddef>
#include <span>

namespace adaptids {

/// Binary confusion counts with Malicious as the positive class.
struct EvalMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  ///< 2tp + fp + fn == 0; f1 reported as 0

    std::size_t total() const noexcept { return tp + fp + fn + tn; }

    friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

EvalMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Throws Error(LengthMismatch) when the spans differ in size.
EvalMetrics f1(std::span<const Label> preds, std::span<const Label> truths);

} // namespace adaptids
