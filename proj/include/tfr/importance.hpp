#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/gnb.hpp"
#include "tfr/gradient_boosting.hpp"
#include "tfr/matrix.hpp"
#include "tfr/random_forest.hpp"

namespace tfr {

inline std::vector<double> impurity_importance(const RandomForest& model) {
    return model.feature_importances();
}

inline std::vector<double> impurity_importance(const GradientBoosting& model) {
    return model.feature_importances();
}

inline std::vector<double> impurity_importance(const GaussianNb&) {
    throw NotTreeBased("naive Bayes has no split-based importance");
}

// One column of importances keyed by feature id, e.g. for one
// preprocessing variant.
struct ImportanceColumn {
    std::string name;
    std::vector<std::size_t> feature_ids;
    std::vector<double> importance;
};

struct ImportanceRow {
    std::size_t feature_id = 0;
    std::vector<double> importance;  // per variant
    std::vector<int> rank;           // per variant, dense, 1-based
    double avg_importance = 0.0;
    double avg_rank = 0.0;
};

struct ImportanceTable {
    std::vector<std::string> variant_names;
    std::vector<ImportanceRow> rows;  // sorted by avg_rank ascending
};

// Dense 1-based ranks by descending value: tied values share a rank and
// the next distinct value gets the next integer.
inline std::vector<int> dense_ranks(const std::vector<double>& values) {
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto it = std::lower_bound(distinct.begin(), distinct.end(), values[i], std::greater<>());
        ranks[i] = static_cast<int>(it - distinct.begin()) + 1;
    }
    return ranks;
}

inline ImportanceTable rank_aggregate(const std::vector<ImportanceColumn>& columns) {
    if (columns.empty()) throw SpecInvalid("no importance columns");
    const auto& ids = columns.front().feature_ids;
    for (const ImportanceColumn& col : columns)
        if (col.feature_ids != ids)
            throw MismatchedFeatureSets("importance columns disagree on feature ids");

    std::size_t nf = ids.size(), nv = columns.size();
    std::vector<std::vector<int>> ranks(nv);
    for (std::size_t v = 0; v < nv; ++v) ranks[v] = dense_ranks(columns[v].importance);

    ImportanceTable table;
    for (const ImportanceColumn& col : columns) table.variant_names.push_back(col.name);
    table.rows.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        ImportanceRow& row = table.rows[i];
        row.feature_id = ids[i];
        for (std::size_t v = 0; v < nv; ++v) {
            row.importance.push_back(columns[v].importance[i]);
            row.rank.push_back(ranks[v][i]);
            row.avg_importance += columns[v].importance[i];
            row.avg_rank += static_cast<double>(ranks[v][i]);
        }
        row.avg_importance /= static_cast<double>(nv);
        row.avg_rank /= static_cast<double>(nv);
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const ImportanceRow& a, const ImportanceRow& b) {
        if (a.avg_rank != b.avg_rank) return a.avg_rank < b.avg_rank;
        return a.feature_id < b.feature_id;
    });
    return table;
}

// Histogram mutual information in nats between each column and the labels.
// Columns are quantile-binned so every bin holds roughly the same mass;
// constant columns land in a single bin and score exactly zero.
inline std::vector<double> mutual_information(const Matrix& x, const std::vector<int>& y,
                                              int bins = 8) {
    std::size_t n = x.rows();
    if (n == 0) throw SpecInvalid("mutual information of an empty table");
    int n_classes = *std::max_element(y.begin(), y.end()) + 1;
    std::vector<double> class_p(n_classes, 0.0);
    for (int c : y) class_p[c] += 1.0;
    for (double& p : class_p) p /= static_cast<double>(n);

    std::vector<double> mi(x.cols(), 0.0);
    std::vector<double> col(n);
    for (std::size_t fcol = 0; fcol < x.cols(); ++fcol) {
        for (std::size_t i = 0; i < n; ++i) col[i] = x(i, fcol);
        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        // internal quantile edges; duplicates collapse so ties stay together
        std::vector<double> edges;
        for (int b = 1; b < bins; ++b) {
            std::size_t pos = static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins);
            pos = std::min(pos, n - 1);
            edges.push_back(sorted[pos]);
        }
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        std::size_t nb = edges.size() + 1;
        std::vector<double> joint(nb * n_classes, 0.0), bin_p(nb, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto bin = static_cast<std::size_t>(
                std::lower_bound(edges.begin(), edges.end(), col[i]) - edges.begin());
            joint[bin * n_classes + y[i]] += 1.0;
            bin_p[bin] += 1.0;
        }
        double acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b)
            for (int c = 0; c < n_classes; ++c) {
                double pj = joint[b * n_classes + c] / static_cast<double>(n);
                double pb = bin_p[b] / static_cast<double>(n);
                if (pj > 0.0) acc += pj * std::log(pj / (pb * class_p[c]));
            }
        mi[fcol] = std::max(acc, 0.0);
    }
    return mi;
}

// Pearson correlations; constant columns correlate 0 with everything else.
inline Matrix correlation_matrix(const Matrix& x) {
    std::size_t n = x.rows(), nf = x.cols();
    if (n < 2) throw SpecInvalid("correlation needs at least 2 samples");
    std::vector<double> mean(nf, 0.0), norm(nf, 0.0);
    for (std::size_t c = 0; c < nf; ++c) {
        for (std::size_t r = 0; r < n; ++r) mean[c] += x(r, c);
        mean[c] /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            double d = x(r, c) - mean[c];
            norm[c] += d * d;
        }
        norm[c] = std::sqrt(norm[c]);
    }
    Matrix corr(nf, nf);
    for (std::size_t a = 0; a < nf; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < nf; ++b) {
            double v = 0.0;
            if (norm[a] > 0.0 && norm[b] > 0.0) {
                double dot = 0.0;
                for (std::size_t r = 0; r < n; ++r)
                    dot += (x(r, a) - mean[a]) * (x(r, b) - mean[b]);
                v = dot / (norm[a] * norm[b]);
            }
            corr(a, b) = v;
            corr(b, a) = v;
        }
    }
    return corr;
}

}  // namespace tfr
