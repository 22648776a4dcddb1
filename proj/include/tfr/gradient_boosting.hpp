#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tfr/dataset.hpp"
#include "tfr/random.hpp"
#include "tfr/tree.hpp"

namespace tfr {

struct GbParams {
    std::size_t n_estimators = 100;
    std::size_t max_depth = 3;
    SplitCriterion criterion = SplitCriterion::friedman_mse;  // mse or friedman_mse
    double subsample = 1.0;   // row fraction per iteration, without replacement
    double learning_rate = 0.1;
};

// Multiclass gradient boosting with softmax loss. Each iteration fits one
// regression tree per class to the residuals y_onehot - p on a shared row
// subsample; leaves take the one-step Newton value scaled by (K-1)/K.
class GradientBoosting {
public:
    void fit(const Matrix& x, const std::vector<int>& y, int n_classes, const GbParams& params,
             std::uint64_t seed, const std::vector<std::size_t>& feature_ids) {
        if (params.criterion != SplitCriterion::mse &&
            params.criterion != SplitCriterion::friedman_mse)
            throw SpecInvalid("gradient boosting expects mse or friedman_mse");
        if (params.subsample <= 0.0 || params.subsample > 1.0)
            throw SpecInvalid("subsample must be in (0, 1]");
        n_classes_ = n_classes;
        n_features_ = x.cols();
        learning_rate_ = params.learning_rate;
        std::size_t n = x.rows();

        base_score_.assign(n_classes_, 0.0);
        std::vector<double> prior(n_classes_, 0.0);
        for (int c : y) prior[c] += 1.0;
        for (int c = 0; c < n_classes_; ++c) {
            prior[c] /= static_cast<double>(n);
            base_score_[c] = prior[c] > 0.0 ? std::log(prior[c]) : -1e9;
        }

        std::vector<double> f(n * n_classes_);
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < n_classes_; ++c) f[i * n_classes_ + c] = base_score_[c];

        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.criterion = params.criterion;
        tp.max_features = 1.0;

        trees_.clear();
        trees_.reserve(params.n_estimators * n_classes_);
        train_log_loss_.clear();
        train_log_loss_.push_back(log_loss(f, y));

        auto n_sub = static_cast<std::size_t>(
            std::llround(params.subsample * static_cast<double>(n)));
        n_sub = std::clamp<std::size_t>(n_sub, 1, n);
        std::vector<std::uint32_t> all_rows(n);
        std::iota(all_rows.begin(), all_rows.end(), 0u);

        std::vector<double> prob(n_classes_);
        std::vector<double> residual(n), num(n), den(n);
        double leaf_scale = n_classes_ > 1
                                ? static_cast<double>(n_classes_ - 1) / static_cast<double>(n_classes_)
                                : 1.0;
        for (std::size_t m = 0; m < params.n_estimators; ++m) {
            std::mt19937_64 rng = make_rng(seed, m);
            std::vector<std::uint32_t> rows = all_rows;
            for (std::size_t i = 0; i < n_sub; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
                std::swap(rows[i], rows[j]);
            }
            rows.resize(n_sub);
            std::sort(rows.begin(), rows.end());

            // probabilities are frozen at the start of the iteration; all K
            // residual trees of this stage see the same p
            std::vector<double> p(n * n_classes_);
            for (std::size_t i = 0; i < n; ++i) {
                softmax_row(&f[i * n_classes_], prob);
                for (int c = 0; c < n_classes_; ++c) p[i * n_classes_ + c] = prob[c];
            }

            for (int k = 0; k < n_classes_; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    double r = (y[i] == k ? 1.0 : 0.0) - p[i * n_classes_ + k];
                    residual[i] = r;
                    num[i] = r;
                    den[i] = std::abs(r) * (1.0 - std::abs(r));
                }
                RegressionTree tree;
                tree.fit(x, residual, rows, tp, rng, num, den, leaf_scale, feature_ids);
                for (std::size_t i = 0; i < n; ++i)
                    f[i * n_classes_ + k] += learning_rate_ * tree.predict(x.row(i));
                trees_.push_back(std::move(tree));
            }
            train_log_loss_.push_back(log_loss(f, y));
        }
    }

    std::vector<double> decision_scores(std::span<const double> row) const {
        std::vector<double> score = base_score_;
        for (std::size_t t = 0; t < trees_.size(); ++t)
            score[t % n_classes_] += learning_rate_ * trees_[t].predict(row);
        return score;
    }

    int predict(std::span<const double> row) const {
        std::vector<double> score = decision_scores(row);
        return static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
    }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
        return out;
    }

    std::vector<double> feature_importances() const {
        std::vector<double> total(n_features_, 0.0);
        for (const RegressionTree& t : trees_) {
            const auto& imp = t.importances();
            for (std::size_t c = 0; c < n_features_; ++c) total[c] += imp[c];
        }
        double sum = std::accumulate(total.begin(), total.end(), 0.0);
        if (sum > 0.0)
            for (double& v : total) v /= sum;
        return total;
    }

    // Training softmax log-loss after 0, 1, ..., n_estimators iterations.
    const std::vector<double>& train_log_loss_trace() const { return train_log_loss_; }

private:
    void softmax_row(const double* scores, std::vector<double>& out) const {
        double mx = scores[0];
        for (int c = 1; c < n_classes_; ++c) mx = std::max(mx, scores[c]);
        double sum = 0.0;
        for (int c = 0; c < n_classes_; ++c) {
            out[c] = std::exp(scores[c] - mx);
            sum += out[c];
        }
        for (int c = 0; c < n_classes_; ++c) out[c] /= sum;
    }

    double log_loss(const std::vector<double>& f, const std::vector<int>& y) const {
        std::size_t n = y.size();
        std::vector<double> prob(n_classes_);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            softmax_row(&f[i * n_classes_], prob);
            acc -= std::log(std::max(prob[y[i]], 1e-300));
        }
        return acc / static_cast<double>(n);
    }

    int n_classes_ = 0;
    std::size_t n_features_ = 0;
    double learning_rate_ = 0.1;
    std::vector<double> base_score_;
    std::vector<RegressionTree> trees_;  // iteration-major, class-minor
    std::vector<double> train_log_loss_;
};

}  // namespace tfr
