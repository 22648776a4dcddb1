#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"

namespace tfr {

struct GnbParams {
    double var_smoothing = 1e-9;
};

// Gaussian naive Bayes. Per-class variances are widened by
// var_smoothing times the largest full-data feature variance.
class GaussianNb {
public:
    void fit(const Matrix& x, const std::vector<int>& y, int n_classes, const GnbParams& params) {
        if (params.var_smoothing < 0.0) throw SpecInvalid("var_smoothing must be >= 0");
        n_classes_ = n_classes;
        std::size_t nf = x.cols(), n = x.rows();
        mean_.assign(n_classes_ * nf, 0.0);
        var_.assign(n_classes_ * nf, 0.0);
        log_prior_.assign(n_classes_, 0.0);
        std::vector<double> count(n_classes_, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            count[y[i]] += 1.0;
            for (std::size_t fcol = 0; fcol < nf; ++fcol) mean_[y[i] * nf + fcol] += x(i, fcol);
        }
        for (int c = 0; c < n_classes_; ++c) {
            if (count[c] == 0.0) throw SpecInvalid("class " + std::to_string(c) + " has no samples");
            for (std::size_t fcol = 0; fcol < nf; ++fcol) mean_[c * nf + fcol] /= count[c];
            log_prior_[c] = std::log(count[c] / static_cast<double>(n));
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t fcol = 0; fcol < nf; ++fcol) {
                double d = x(i, fcol) - mean_[y[i] * nf + fcol];
                var_[y[i] * nf + fcol] += d * d;
            }
        for (int c = 0; c < n_classes_; ++c)
            for (std::size_t fcol = 0; fcol < nf; ++fcol) var_[c * nf + fcol] /= count[c];

        // epsilon is one scalar: smoothing times the largest feature
        // variance over the whole training set
        double max_var = 0.0;
        for (std::size_t fcol = 0; fcol < nf; ++fcol) {
            double mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) mu += x(i, fcol);
            mu /= static_cast<double>(n);
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = x(i, fcol) - mu;
                v += d * d;
            }
            max_var = std::max(max_var, v / static_cast<double>(n));
        }
        double eps = params.var_smoothing * max_var;
        for (double& v : var_) {
            v += eps;
            if (v <= 0.0)
                throw DegenerateVariance(
                    "a feature has zero variance and smoothing contributes nothing");
        }
        n_features_ = nf;
    }

    int predict(std::span<const double> row) const {
        int best = 0;
        double best_score = score(row, 0);
        for (int c = 1; c < n_classes_; ++c) {
            double s = score(row, c);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
        return out;
    }

    double score(std::span<const double> row, int c) const {
        double s = log_prior_[c];
        for (std::size_t fcol = 0; fcol < n_features_; ++fcol) {
            double v = var_[c * n_features_ + fcol];
            double d = row[fcol] - mean_[c * n_features_ + fcol];
            s += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
        }
        return s;
    }

private:
    int n_classes_ = 0;
    std::size_t n_features_ = 0;
    std::vector<double> mean_, var_, log_prior_;
};

}  // namespace tfr
