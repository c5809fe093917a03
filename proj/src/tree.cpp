#include "adaptids/tree.hpp"

#include "adaptids/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adaptids {

void FeatureMatrix::push_row(std::span<const double> values) {
    if (cols == 0 && data.empty()) cols = values.size();
    data.insert(data.end(), values.begin(), values.end());
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

namespace {

constexpr double kGainTolerance = 1e-12;

double midpoint(double lo, double hi) {
    double m = lo + (hi - lo) / 2.0;
    if (m >= hi || m < lo) m = lo;
    return m;
}

double gini(double benign, double malicious) {
    const double total = benign + malicious;
    if (total <= 0.0) return 0.0;
    const double pb = benign / total;
    const double pm = malicious / total;
    return 1.0 - pb * pb - pm * pm;
}

struct Candidate {
    double threshold = 0.0;
    double gain = 0.0;
};

// Gini criterion over integer-weighted rows.
struct GiniCriterion {
    std::span<const Label> y;
    std::span<const std::uint32_t> w;  // empty means unit weights

    struct Stats {
        double benign = 0.0;
        double malicious = 0.0;
    };

    double weight(std::uint32_t s) const { return w.empty() ? 1.0 : static_cast<double>(w[s]); }

    void add(Stats& st, std::uint32_t s) const {
        (y[s] == Label::Malicious ? st.malicious : st.benign) += weight(s);
    }

    bool is_pure(const Stats& st) const { return st.benign == 0.0 || st.malicious == 0.0; }

    double leaf_value(const Stats& st) const {
        const double total = st.benign + st.malicious;
        return total > 0.0 ? st.malicious / total : 0.0;
    }

    bool better(double gain, double best) const { return gain > best + kGainTolerance; }
    bool tied(double gain, double best) const { return std::abs(gain - best) <= kGainTolerance; }

    std::optional<Candidate> scan(const FeatureMatrix& x, std::size_t f, std::span<const std::uint32_t> sorted,
                                  const Stats& node) const {
        const double total = node.benign + node.malicious;
        const double parent = gini(node.benign, node.malicious);
        Stats left;
        std::optional<Candidate> best;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            add(left, sorted[i]);
            const double v = x.at(sorted[i], f);
            const double next = x.at(sorted[i + 1], f);
            if (!(next > v)) continue;
            const double rb = node.benign - left.benign;
            const double rm = node.malicious - left.malicious;
            const double wl = left.benign + left.malicious;
            const double gain =
                parent - (wl / total) * gini(left.benign, left.malicious) - ((rb + rm) / total) * gini(rb, rm);
            if (!best || better(gain, best->gain)) best = Candidate{midpoint(v, next), gain};
        }
        return best;
    }
};

// Squared-error criterion; the split proxy is sum_l^2/n_l + sum_r^2/n_r.
struct SquaredErrorCriterion {
    std::span<const double> target;
    std::span<const double> hessian;

    struct Stats {
        double count = 0.0;
        double sum = 0.0;
        double hess = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
    };

    void add(Stats& st, std::uint32_t s) const {
        st.count += 1.0;
        st.sum += target[s];
        st.hess += hessian[s];
        st.lo = std::min(st.lo, target[s]);
        st.hi = std::max(st.hi, target[s]);
    }

    bool is_pure(const Stats& st) const { return st.hi <= st.lo; }

    double leaf_value(const Stats& st) const {
        if (std::abs(st.hess) < 1e-150) return 0.0;
        return st.sum / st.hess;
    }

    static double tolerance(double reference) { return kGainTolerance * std::max(1.0, std::abs(reference)); }
    bool better(double gain, double best) const { return gain > best + tolerance(best); }
    bool tied(double gain, double best) const { return std::abs(gain - best) <= tolerance(best); }

    std::optional<Candidate> scan(const FeatureMatrix& x, std::size_t f, std::span<const std::uint32_t> sorted,
                                  const Stats& node) const {
        double n_left = 0.0;
        double sum_left = 0.0;
        const double parent = node.sum * node.sum / node.count;
        std::optional<Candidate> best;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            n_left += 1.0;
            sum_left += target[sorted[i]];
            const double v = x.at(sorted[i], f);
            const double next = x.at(sorted[i + 1], f);
            if (!(next > v)) continue;
            const double n_right = node.count - n_left;
            const double sum_right = node.sum - sum_left;
            const double gain = (sum_left * sum_left / n_left + sum_right * sum_right / n_right - parent) / node.count;
            if (!best || better(gain, best->gain)) best = Candidate{midpoint(v, next), gain};
        }
        return best;
    }
};

// Presorted CART builder: every feature keeps its own ordering of the node's
// samples, and children are produced by stable partitioning each ordering.
template <typename Criterion>
class Builder {
public:
    Builder(const FeatureMatrix& x, std::vector<std::uint32_t> samples, Criterion crit, const TreeParams& params,
            std::mt19937_64* rng)
        : x_(x), crit_(crit), params_(params), rng_(rng), goes_left_(x.rows(), 0) {
        sorted_.resize(x.cols);
        for (std::size_t f = 0; f < x.cols; ++f) {
            auto& order = sorted_[f];
            order = samples;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
        }
        scratch_.resize(samples.size());
        feature_order_.resize(x.cols);
    }

    Tree build() {
        Tree tree;
        tree.nodes.emplace_back();
        struct Item {
            std::uint32_t node;
            std::size_t begin, end, depth;
        };
        std::vector<Item> stack{{0, 0, sorted_.empty() ? 0 : sorted_[0].size(), 0}};
        while (!stack.empty()) {
            const Item item = stack.back();
            stack.pop_back();

            typename Criterion::Stats stats;
            for (std::size_t i = item.begin; i < item.end; ++i) crit_.add(stats, sorted_[0][i]);
            tree.nodes[item.node].value = crit_.leaf_value(stats);

            const bool depth_reached = params_.max_depth > 0 && item.depth >= params_.max_depth;
            if (depth_reached || item.end - item.begin < 2 || crit_.is_pure(stats)) continue;

            auto split = find_split(item.begin, item.end, stats);
            if (!split) continue;

            const std::size_t mid = partition(item.begin, item.end, split->feature, split->threshold);
            const auto left = static_cast<std::uint32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            TreeNode& node = tree.nodes[item.node];
            node.feature = static_cast<std::int32_t>(split->feature);
            node.threshold = split->threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, mid, item.end, item.depth + 1});
            stack.push_back({left, item.begin, mid, item.depth + 1});
        }
        return tree;
    }

private:
    std::optional<Split> find_split(std::size_t begin, std::size_t end, const typename Criterion::Stats& stats) {
        std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
        std::size_t budget = x_.cols;
        if (params_.max_features > 0 && params_.max_features < x_.cols && rng_ != nullptr) {
            budget = params_.max_features;
            for (std::size_t i = x_.cols - 1; i > 0; --i) {
                std::swap(feature_order_[i], feature_order_[uniform_index(*rng_, i + 1)]);
            }
        }

        std::optional<Split> best;
        std::size_t visited = 0;
        for (std::size_t f : feature_order_) {
            if (visited == budget) break;
            auto seg = std::span<const std::uint32_t>(sorted_[f]).subspan(begin, end - begin);
            if (!(x_.at(seg.back(), f) > x_.at(seg.front(), f))) continue;  // constant in this node
            ++visited;
            auto cand = crit_.scan(x_, f, seg, stats);
            if (!cand) continue;
            if (!best || crit_.better(cand->gain, best->gain) ||
                (crit_.tied(cand->gain, best->gain) && f < best->feature)) {
                best = Split{f, cand->threshold, cand->gain};
            }
        }
        return best;
    }

    std::size_t partition(std::size_t begin, std::size_t end, std::size_t feature, double threshold) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t s = sorted_[feature][i];
            goes_left_[s] = x_.at(s, feature) <= threshold ? 1 : 0;
        }
        std::size_t mid = begin;
        for (auto& order : sorted_) {
            std::size_t l = begin;
            std::size_t r = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t s = order[i];
                if (goes_left_[s]) order[l++] = s;
                else scratch_[r++] = s;
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                      order.begin() + static_cast<std::ptrdiff_t>(l));
            mid = l;
        }
        return mid;
    }

    const FeatureMatrix& x_;
    Criterion crit_;
    TreeParams params_;
    std::mt19937_64* rng_;
    std::vector<std::vector<std::uint32_t>> sorted_;
    std::vector<char> goes_left_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::size_t> feature_order_;
};

} // namespace

std::optional<Split> best_split(const FeatureMatrix& x, std::span<const Label> y,
                                std::span<const std::size_t> rows, std::span<const std::size_t> features) {
    if (rows.size() < 2) return std::nullopt;
    GiniCriterion crit{y, {}};
    GiniCriterion::Stats stats;
    for (auto r : rows) crit.add(stats, static_cast<std::uint32_t>(r));

    std::vector<std::size_t> ordered(features.begin(), features.end());
    std::sort(ordered.begin(), ordered.end());

    std::optional<Split> best;
    std::vector<std::uint32_t> sorted(rows.size());
    for (std::size_t f : ordered) {
        std::transform(rows.begin(), rows.end(), sorted.begin(), [](std::size_t r) { return static_cast<std::uint32_t>(r); });
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
        auto cand = crit.scan(x, f, sorted, stats);
        if (cand && (!best || crit.better(cand->gain, best->gain))) best = Split{f, cand->threshold, cand->gain};
    }
    return best;
}

Tree grow_classification_tree(const FeatureMatrix& x, std::span<const Label> y,
                              std::span<const std::uint32_t> weights, const TreeParams& params,
                              std::mt19937_64* rng) {
    std::vector<std::uint32_t> samples;
    samples.reserve(x.rows());
    for (std::uint32_t i = 0; i < x.rows(); ++i) {
        if (weights.empty() || weights[i] > 0) samples.push_back(i);
    }
    Builder<GiniCriterion> builder(x, std::move(samples), GiniCriterion{y, weights}, params, rng);
    return builder.build();
}

Tree grow_regression_tree(const FeatureMatrix& x, std::span<const double> target,
                          std::span<const double> hessian, const TreeParams& params) {
    std::vector<std::uint32_t> samples(x.rows());
    std::iota(samples.begin(), samples.end(), 0u);
    Builder<SquaredErrorCriterion> builder(x, std::move(samples), SquaredErrorCriterion{target, hessian}, params,
                                           nullptr);
    return builder.build();
}

} // namespace adaptids
