#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "tfr/dataset.hpp"
#include "tfr/parallel.hpp"
#include "tfr/random.hpp"
#include "tfr/tree.hpp"

namespace tfr {

struct RfParams {
    std::size_t n_estimators = 300;
    std::size_t max_depth = 8;
    SplitCriterion criterion = SplitCriterion::gini;  // gini or entropy
    double max_features = 0.3;
};

class RandomForest {
public:
    // Trees train independently on bootstrap resamples; tree t draws all
    // its randomness from a seed mixed with t, so the result is identical
    // however the loop is scheduled.
    void fit(const Matrix& x, const std::vector<int>& y, int n_classes, const RfParams& params,
             std::uint64_t seed, const std::vector<std::size_t>& feature_ids,
             unsigned threads = 1) {
        if (params.criterion != SplitCriterion::gini && params.criterion != SplitCriterion::entropy)
            throw SpecInvalid("random forest expects gini or entropy");
        if (params.n_estimators == 0) throw SpecInvalid("n_estimators must be positive");
        n_classes_ = n_classes;
        trees_.assign(params.n_estimators, {});
        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.criterion = params.criterion;
        tp.max_features = params.max_features;
        std::size_t n = x.rows();
        parallel_for(params.n_estimators, threads, [&](std::size_t t) {
            std::mt19937_64 rng = make_rng(seed, t);
            std::vector<double> weight(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) weight[rng() % n] += 1.0;
            trees_[t].fit(x, y, n_classes_, tp, rng, weight, feature_ids);
        });
        n_features_ = x.cols();
    }

    int predict(std::span<const double> row) const {
        std::vector<int> votes(n_classes_, 0);
        for (const ClassificationTree& t : trees_) ++votes[t.predict_class(row)];
        return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }

    std::vector<int> predict(const Matrix& x, unsigned threads = 1) const {
        std::vector<int> out(x.rows());
        parallel_for(x.rows(), threads, [&](std::size_t r) { out[r] = predict(x.row(r)); });
        return out;
    }

    // Mean of the per-tree impurity-decrease shares, renormalized to sum 1.
    std::vector<double> feature_importances() const {
        std::vector<double> total(n_features_, 0.0);
        for (const ClassificationTree& t : trees_) {
            const auto& imp = t.importances();
            for (std::size_t c = 0; c < n_features_; ++c) total[c] += imp[c];
        }
        double sum = std::accumulate(total.begin(), total.end(), 0.0);
        if (sum > 0.0)
            for (double& v : total) v /= sum;
        return total;
    }

    std::size_t n_trees() const { return trees_.size(); }

private:
    int n_classes_ = 0;
    std::size_t n_features_ = 0;
    std::vector<ClassificationTree> trees_;
};

}  // namespace tfr
