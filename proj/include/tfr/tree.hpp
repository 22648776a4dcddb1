#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"

namespace tfr {

enum class SplitCriterion { gini, entropy, mse, friedman_mse };

inline SplitCriterion parse_criterion(const std::string& s) {
    if (s == "gini") return SplitCriterion::gini;
    if (s == "entropy") return SplitCriterion::entropy;
    if (s == "mse") return SplitCriterion::mse;
    if (s == "friedman_mse") return SplitCriterion::friedman_mse;
    throw SpecInvalid("unknown split criterion '" + s + "'");
}

inline std::string criterion_name(SplitCriterion c) {
    switch (c) {
        case SplitCriterion::gini: return "gini";
        case SplitCriterion::entropy: return "entropy";
        case SplitCriterion::mse: return "mse";
        case SplitCriterion::friedman_mse: return "friedman_mse";
    }
    return "?";
}

namespace detail {

// Samples go left when x[feature] <= threshold. Thresholds sit exactly on
// the largest left-hand training value, so any strictly increasing
// per-column transform leaves the routing of every point unchanged.
struct TreeNode {
    std::int32_t feature = -1;  // column index, -1 for leaves
    double threshold = 0.0;
    std::int32_t left = -1, right = -1;
    double leaf_value = 0.0;            // regression
    std::vector<double> leaf_counts;    // classification
};

// k distinct columns drawn by the rank of their feature id, so the chosen
// id set depends only on the rng state, never on column order.
inline std::vector<std::uint32_t> draw_candidates(std::mt19937_64& rng,
                                                  const std::vector<std::uint32_t>& cols_by_id,
                                                  std::size_t k,
                                                  std::vector<std::uint32_t>& scratch) {
    scratch = cols_by_id;
    std::size_t n = scratch.size();
    std::vector<std::uint32_t> picked;
    picked.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(scratch[i], scratch[j]);
        picked.push_back(scratch[i]);
    }
    return picked;
}

struct SplitChoice {
    bool found = false;
    double gain = 0.0;
    std::uint32_t column = 0;
    std::size_t column_id_rank = 0;  // rank of the column's feature id
    double threshold = 0.0;
    double importance = 0.0;  // node weight times impurity decrease
};

}  // namespace detail

struct TreeParams {
    std::size_t max_depth = 10;
    std::size_t min_samples_split = 2;
    double max_features = 1.0;  // fraction of columns tried per split
    SplitCriterion criterion = SplitCriterion::gini;
};

// Single CART-style classification tree on weighted samples.
class ClassificationTree {
public:
    // feature_ids maps columns to global ids; candidate draws and split
    // tie-breaks use ids so results survive column permutations.
    void fit(const Matrix& x, const std::vector<int>& y, int n_classes, const TreeParams& params,
             std::mt19937_64& rng, const std::vector<double>& sample_weight,
             const std::vector<std::size_t>& feature_ids) {
        if (x.rows() != y.size() || x.rows() != sample_weight.size())
            throw SpecInvalid("rows, labels and weights must agree");
        if (params.max_features <= 0.0 || params.max_features > 1.0)
            throw SpecInvalid("max_features must be in (0, 1]");
        criterion_is_entropy_ = params.criterion == SplitCriterion::entropy;
        n_classes_ = n_classes;
        nodes_.clear();
        importance_.assign(x.cols(), 0.0);

        cols_by_id_.resize(x.cols());
        std::iota(cols_by_id_.begin(), cols_by_id_.end(), 0u);
        std::sort(cols_by_id_.begin(), cols_by_id_.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return feature_ids[a] < feature_ids[b]; });
        id_rank_.assign(x.cols(), 0);
        for (std::size_t r = 0; r < cols_by_id_.size(); ++r) id_rank_[cols_by_id_[r]] = r;

        std::vector<std::uint32_t> rows;
        double total_w = 0.0;
        for (std::uint32_t i = 0; i < x.rows(); ++i)
            if (sample_weight[i] > 0.0) {
                rows.push_back(i);
                total_w += sample_weight[i];
            }
        if (rows.empty()) throw SpecInvalid("all sample weights are zero");
        root_weight_ = total_w;
        build(x, y, sample_weight, params, rng, rows, 0);
        double sum = std::accumulate(importance_.begin(), importance_.end(), 0.0);
        if (sum > 0.0)
            for (double& v : importance_) v /= sum;
    }

    int predict_class(std::span<const double> row) const {
        const auto& counts = leaf_for(row).leaf_counts;
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }

    const std::vector<double>& leaf_distribution(std::span<const double> row) const {
        return leaf_for(row).leaf_counts;
    }

    // Per-column share of the total impurity decrease; sums to 1 (or 0 for
    // a stump that never split).
    const std::vector<double>& importances() const { return importance_; }

private:
    const detail::TreeNode& leaf_for(std::span<const double> row) const {
        std::int32_t idx = 0;
        while (nodes_[idx].feature >= 0)
            idx = row[nodes_[idx].feature] <= nodes_[idx].threshold ? nodes_[idx].left
                                                                    : nodes_[idx].right;
        return nodes_[idx];
    }

    double impurity(const std::vector<double>& counts, double w) const {
        if (w <= 0.0) return 0.0;
        double imp = 0.0;
        if (criterion_is_entropy_) {
            for (double c : counts)
                if (c > 0.0) {
                    double p = c / w;
                    imp -= p * std::log(p);
                }
        } else {
            double acc = 0.0;
            for (double c : counts) acc += (c / w) * (c / w);
            imp = 1.0 - acc;
        }
        return imp;
    }

    std::int32_t build(const Matrix& x, const std::vector<int>& y,
                       const std::vector<double>& w, const TreeParams& params,
                       std::mt19937_64& rng, std::vector<std::uint32_t>& rows, std::size_t depth) {
        std::vector<double> counts(n_classes_, 0.0);
        double node_w = 0.0;
        for (std::uint32_t i : rows) {
            counts[y[i]] += w[i];
            node_w += w[i];
        }
        double node_imp = impurity(counts, node_w);

        auto make_leaf = [&]() {
            detail::TreeNode leaf;
            leaf.leaf_counts = counts;
            nodes_.push_back(std::move(leaf));
            return static_cast<std::int32_t>(nodes_.size() - 1);
        };
        if (depth >= params.max_depth || rows.size() < params.min_samples_split || node_imp <= 0.0)
            return make_leaf();

        std::size_t k = static_cast<std::size_t>(
            std::ceil(params.max_features * static_cast<double>(x.cols())));
        k = std::clamp<std::size_t>(k, 1, x.cols());
        auto candidates = detail::draw_candidates(rng, cols_by_id_, k, scratch_);
        std::sort(candidates.begin(), candidates.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return id_rank_[a] < id_rank_[b]; });

        detail::SplitChoice best;
        std::vector<std::pair<double, std::uint32_t>> sorted(rows.size());
        std::vector<double> left_counts(n_classes_);
        for (std::uint32_t col : candidates) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                sorted[i] = {x(rows[i], col), rows[i]};
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            double left_w = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                std::uint32_t row = sorted[i].second;
                left_counts[y[row]] += w[row];
                left_w += w[row];
                if (sorted[i].first == sorted[i + 1].first) continue;
                double right_w = node_w - left_w;
                if (left_w <= 0.0 || right_w <= 0.0) continue;
                double imp_l, imp_r;
                if (criterion_is_entropy_) {
                    imp_l = imp_r = 0.0;
                    for (int c = 0; c < n_classes_; ++c) {
                        double cl = left_counts[c], cr = counts[c] - left_counts[c];
                        if (cl > 0.0) imp_l -= (cl / left_w) * std::log(cl / left_w);
                        if (cr > 0.0) imp_r -= (cr / right_w) * std::log(cr / right_w);
                    }
                } else {
                    double accl = 0.0, accr = 0.0;
                    for (int c = 0; c < n_classes_; ++c) {
                        double cl = left_counts[c], cr = counts[c] - left_counts[c];
                        accl += (cl / left_w) * (cl / left_w);
                        accr += (cr / right_w) * (cr / right_w);
                    }
                    imp_l = 1.0 - accl;
                    imp_r = 1.0 - accr;
                }
                double gain = node_imp - (left_w * imp_l + right_w * imp_r) / node_w;
                if (gain > best.gain + 1e-15 ||
                    (best.found && gain > best.gain - 1e-15 && id_rank_[col] < best.column_id_rank)) {
                    best.found = true;
                    best.gain = gain;
                    best.column = col;
                    best.column_id_rank = id_rank_[col];
                    best.threshold = sorted[i].first;
                    best.importance = node_w * gain;
                }
            }
        }
        if (!best.found || best.gain <= 0.0) return make_leaf();

        importance_[best.column] += best.importance;
        std::vector<std::uint32_t> left_rows, right_rows;
        for (std::uint32_t i : rows) {
            if (x(i, best.column) <= best.threshold) left_rows.push_back(i);
            else right_rows.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        detail::TreeNode node;
        node.feature = static_cast<std::int32_t>(best.column);
        node.threshold = best.threshold;
        nodes_.push_back(std::move(node));
        auto self = static_cast<std::int32_t>(nodes_.size() - 1);
        std::int32_t l = build(x, y, w, params, rng, left_rows, depth + 1);
        std::int32_t r = build(x, y, w, params, rng, right_rows, depth + 1);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    int n_classes_ = 0;
    bool criterion_is_entropy_ = false;
    double root_weight_ = 0.0;
    std::vector<detail::TreeNode> nodes_;
    std::vector<double> importance_;
    std::vector<std::uint32_t> cols_by_id_;
    std::vector<std::size_t> id_rank_;
    std::vector<std::uint32_t> scratch_;
};

// Regression tree for boosting residuals. Leaf values come from caller
// supplied per-sample numerator/denominator terms so the boosting step can
// be folded directly into the leaves.
class RegressionTree {
public:
    void fit(const Matrix& x, const std::vector<double>& target,
             const std::vector<std::uint32_t>& sample_rows, const TreeParams& params,
             std::mt19937_64& rng, const std::vector<double>& leaf_num,
             const std::vector<double>& leaf_den, double leaf_scale,
             const std::vector<std::size_t>& feature_ids) {
        nodes_.clear();
        importance_.assign(x.cols(), 0.0);
        cols_by_id_.resize(x.cols());
        std::iota(cols_by_id_.begin(), cols_by_id_.end(), 0u);
        std::sort(cols_by_id_.begin(), cols_by_id_.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return feature_ids[a] < feature_ids[b]; });
        id_rank_.assign(x.cols(), 0);
        for (std::size_t r = 0; r < cols_by_id_.size(); ++r) id_rank_[cols_by_id_[r]] = r;
        std::vector<std::uint32_t> rows = sample_rows;
        if (rows.empty()) throw SpecInvalid("regression tree needs at least one row");
        build(x, target, params, rng, rows, 0, leaf_num, leaf_den, leaf_scale);
        double sum = std::accumulate(importance_.begin(), importance_.end(), 0.0);
        if (sum > 0.0)
            for (double& v : importance_) v /= sum;
    }

    double predict(std::span<const double> row) const {
        std::int32_t idx = 0;
        while (nodes_[idx].feature >= 0)
            idx = row[nodes_[idx].feature] <= nodes_[idx].threshold ? nodes_[idx].left
                                                                    : nodes_[idx].right;
        return nodes_[idx].leaf_value;
    }

    const std::vector<double>& importances() const { return importance_; }

private:
    std::int32_t build(const Matrix& x, const std::vector<double>& target,
                       const TreeParams& params, std::mt19937_64& rng,
                       std::vector<std::uint32_t>& rows, std::size_t depth,
                       const std::vector<double>& leaf_num, const std::vector<double>& leaf_den,
                       double leaf_scale) {
        double n = static_cast<double>(rows.size());
        double sum = 0.0, sum_sq = 0.0;
        for (std::uint32_t i : rows) {
            sum += target[i];
            sum_sq += target[i] * target[i];
        }
        double node_imp = sum_sq / n - (sum / n) * (sum / n);

        auto make_leaf = [&]() {
            detail::TreeNode leaf;
            double num = 0.0, den = 0.0;
            for (std::uint32_t i : rows) {
                num += leaf_num[i];
                den += leaf_den[i];
            }
            leaf.leaf_value = den > 1e-12 ? leaf_scale * num / den : 0.0;
            nodes_.push_back(std::move(leaf));
            return static_cast<std::int32_t>(nodes_.size() - 1);
        };
        if (depth >= params.max_depth || rows.size() < params.min_samples_split ||
            node_imp <= 1e-24)
            return make_leaf();

        std::size_t k = static_cast<std::size_t>(
            std::ceil(params.max_features * static_cast<double>(x.cols())));
        k = std::clamp<std::size_t>(k, 1, x.cols());
        auto candidates = detail::draw_candidates(rng, cols_by_id_, k, scratch_);
        std::sort(candidates.begin(), candidates.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return id_rank_[a] < id_rank_[b]; });

        bool friedman = params.criterion == SplitCriterion::friedman_mse;
        detail::SplitChoice best;
        std::vector<std::pair<double, std::uint32_t>> sorted(rows.size());
        for (std::uint32_t col : candidates) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                sorted[i] = {x(rows[i], col), rows[i]};
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                double t = target[sorted[i].second];
                left_sum += t;
                left_sq += t * t;
                if (sorted[i].first == sorted[i + 1].first) continue;
                double nl = static_cast<double>(i + 1);
                double nr = n - nl;
                double mean_l = left_sum / nl;
                double mean_r = (sum - left_sum) / nr;
                double score;
                if (friedman) {
                    double diff = mean_l - mean_r;
                    score = nl * nr / (nl + nr) * diff * diff;
                } else {
                    double imp_l = left_sq / nl - mean_l * mean_l;
                    double imp_r = (sum_sq - left_sq) / nr - mean_r * mean_r;
                    score = node_imp - (nl * imp_l + nr * imp_r) / n;
                }
                if (score > best.gain + 1e-15 ||
                    (best.found && score > best.gain - 1e-15 && id_rank_[col] < best.column_id_rank)) {
                    best.found = true;
                    best.gain = score;
                    best.column = col;
                    best.column_id_rank = id_rank_[col];
                    best.threshold = sorted[i].first;
                    double imp_l = left_sq / nl - mean_l * mean_l;
                    double imp_r = (sum_sq - left_sq) / nr - mean_r * mean_r;
                    best.importance = n * (node_imp - (nl * imp_l + nr * imp_r) / n);
                }
            }
        }
        if (!best.found || best.gain <= 0.0 || best.importance <= 0.0) return make_leaf();

        importance_[best.column] += best.importance;
        std::vector<std::uint32_t> left_rows, right_rows;
        for (std::uint32_t i : rows) {
            if (x(i, best.column) <= best.threshold) left_rows.push_back(i);
            else right_rows.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        detail::TreeNode node;
        node.feature = static_cast<std::int32_t>(best.column);
        node.threshold = best.threshold;
        nodes_.push_back(std::move(node));
        auto self = static_cast<std::int32_t>(nodes_.size() - 1);
        std::int32_t l = build(x, target, params, rng, left_rows, depth + 1, leaf_num, leaf_den,
                               leaf_scale);
        std::int32_t r = build(x, target, params, rng, right_rows, depth + 1, leaf_num, leaf_den,
                               leaf_scale);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    std::vector<detail::TreeNode> nodes_;
    std::vector<double> importance_;
    std::vector<std::uint32_t> cols_by_id_;
    std::vector<std::size_t> id_rank_;
    std::vector<std::uint32_t> scratch_;
};

}  // namespace tfr
