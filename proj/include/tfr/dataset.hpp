#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"

namespace tfr {

// Labeled feature table. feature_ids gives every column a stable global id
// so that column subsets and reorderings stay comparable; is_tda flags
// topological columns apart from band-power ones.
struct FeatureMatrix {
    Matrix x;
    std::vector<int> y;
    std::vector<std::string> class_names;   // class index -> label
    std::vector<std::size_t> feature_ids;   // column -> global feature id
    std::vector<char> is_tda;               // column -> provenance flag
};

// Sorted unique labels become class indices 0..C-1.
inline std::pair<std::vector<int>, std::vector<std::string>> encode_labels(
    const std::vector<std::string>& labels) {
    std::vector<std::string> names = labels;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::lower_bound(names.begin(), names.end(), labels[i]);
        y[i] = static_cast<int>(it - names.begin());
    }
    return {std::move(y), std::move(names)};
}

// Columns whose provenance flag matches `want_tda`; pass -1 to keep all.
inline FeatureMatrix select_features(const FeatureMatrix& fm, int want_tda) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < fm.x.cols(); ++c)
        if (want_tda < 0 || static_cast<int>(fm.is_tda[c]) == want_tda) cols.push_back(c);
    FeatureMatrix out;
    out.y = fm.y;
    out.class_names = fm.class_names;
    out.x = Matrix(fm.x.rows(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out.feature_ids.push_back(fm.feature_ids[cols[c]]);
        out.is_tda.push_back(fm.is_tda[cols[c]]);
        for (std::size_t r = 0; r < fm.x.rows(); ++r) out.x(r, c) = fm.x(r, cols[c]);
    }
    return out;
}

}  // namespace tfr
