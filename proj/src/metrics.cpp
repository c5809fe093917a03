#include "adaptids/metrics.hpp"

#include "adaptids/error.hpp"

namespace adaptids {

EvalMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    EvalMetrics m{tp, fp, fn, tn};
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    if (tp + fp > 0) m.precision = d(tp) / d(tp + fp);
    if (tp + fn > 0) m.recall = d(tp) / d(tp + fn);
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom > 0) {
        m.f1 = 2.0 * d(tp) / d(denom);
    } else {
        m.degenerate = true;
    }
    return m;
}

EvalMetrics f1(std::span<const Label> preds, std::span<const Label> truths) {
    if (preds.size() != truths.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                                   std::to_string(truths.size()) + " truths");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == Label::Malicious;
        const bool t = truths[i] == Label::Malicious;
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

} // namespace adaptids
