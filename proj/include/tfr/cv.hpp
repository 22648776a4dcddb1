#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"
#include "tfr/random.hpp"

namespace tfr {

struct CvReport {
    std::vector<double> fold_accuracy;
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::vector<int> fold_of;  // sample -> fold
    std::uint64_t seed = 0;
    std::string warning;
};

// Shuffles each class separately, then deals members round-robin over
// folds with a class-rotated starting fold. Per-class fold counts differ
// from the exact proportion by less than one.
inline std::vector<int> stratified_kfold(const std::vector<int>& y, int k, std::uint64_t seed) {
    if (k < 2) throw SpecInvalid("need at least 2 folds");
    int n_classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
    std::vector<std::vector<std::uint32_t>> members(n_classes);
    for (std::uint32_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
    for (int c = 0; c < n_classes; ++c)
        if (!members[c].empty() && members[c].size() < static_cast<std::size_t>(k))
            throw ClassTooSmall("class " + std::to_string(c) + " has " +
                                std::to_string(members[c].size()) + " members, need " +
                                std::to_string(k));
    std::vector<int> fold(y.size(), -1);
    for (int c = 0; c < n_classes; ++c) {
        auto& idx = members[c];
        std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(c));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng() % i]);
        for (std::size_t i = 0; i < idx.size(); ++i)
            fold[idx[i]] = static_cast<int>((i + static_cast<std::size_t>(c)) % k);
    }
    return fold;
}

// fit_predict trains on (train_x, train_y) and labels test_x.
using FitPredictFn = std::function<std::vector<int>(const Matrix&, const std::vector<int>&,
                                                    const Matrix&)>;

inline CvReport cross_validate(const FitPredictFn& fit_predict, const Matrix& x,
                               const std::vector<int>& y, int k, std::uint64_t seed) {
    CvReport report;
    report.seed = seed;
    report.fold_of = stratified_kfold(y, k, seed);
    std::set<int> distinct(y.begin(), y.end());
    if (distinct.size() < 2) report.warning = "single-class data; accuracy is trivially 1";

    for (int f = 0; f < k; ++f) {
        std::vector<std::uint32_t> train_rows, test_rows;
        for (std::uint32_t i = 0; i < y.size(); ++i)
            (report.fold_of[i] == f ? test_rows : train_rows).push_back(i);
        Matrix train_x(train_rows.size(), x.cols()), test_x(test_rows.size(), x.cols());
        std::vector<int> train_y(train_rows.size()), test_y(test_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            train_y[i] = y[train_rows[i]];
            for (std::size_t c = 0; c < x.cols(); ++c) train_x(i, c) = x(train_rows[i], c);
        }
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            test_y[i] = y[test_rows[i]];
            for (std::size_t c = 0; c < x.cols(); ++c) test_x(i, c) = x(test_rows[i], c);
        }
        std::vector<int> pred = fit_predict(train_x, train_y, test_x);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < test_y.size(); ++i)
            if (pred[i] == test_y[i]) ++hits;
        report.fold_accuracy.push_back(test_y.empty() ? 0.0
                                                      : static_cast<double>(hits) /
                                                            static_cast<double>(test_y.size()));
    }
    double sum = 0.0;
    for (double a : report.fold_accuracy) sum += a;
    report.mean = sum / static_cast<double>(k);
    double sq = 0.0;
    for (double a : report.fold_accuracy) sq += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(sq / static_cast<double>(k));
    return report;
}

}  // namespace tfr
