#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"
#include "tfr/persistence.hpp"

namespace tfr {

// Reference implementation used to cross-check the production reduction.
// Enumerates every simplex of dimension 0..2 below the ceiling and runs the
// textbook left-to-right column reduction over the full boundary matrix.
// Deliberately shares no code with vr_persistence beyond the result types.
// Quadratic-ish in the simplex count, hence the small-input guard.
inline PersistenceDiagram brute_force_persistence(const Matrix& cloud, int max_dim = 1,
                                               bool drop_zero = true) {
    if (max_dim < 0 || max_dim > 1)
        throw DimensionUnsupported("homology dimension " + std::to_string(max_dim) +
                                   " not supported (0 or 1)");
    std::size_t n = cloud.rows();
    if (n == 0) throw EmptyEpoch("persistence of an empty point cloud");
    if (n > 16)
        throw TooLargeForOracle("reference reduction accepts at most 16 points, got " +
                                std::to_string(n));

    auto point_dist = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < cloud.cols(); ++k) {
            double diff = cloud(i, k) - cloud(j, k);
            acc += diff * diff;
        }
        return std::sqrt(acc);
    };

    double cap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) worst = std::max(worst, point_dist(i, j));
        cap = std::min(cap, worst);
    }
    if (n == 1) cap = 0.0;

    struct Simplex {
        double value;
        int dim;
        std::array<std::uint32_t, 3> v;  // entries 0..dim used
    };
    std::vector<Simplex> simplices;
    for (std::uint32_t a = 0; a < n; ++a) simplices.push_back({0.0, 0, {a, 0, 0}});
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b) {
            double d = point_dist(a, b);
            if (d <= cap) simplices.push_back({d, 1, {a, b, 0}});
        }
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b)
            for (std::uint32_t c = b + 1; c < n; ++c) {
                double d = std::max({point_dist(a, b), point_dist(a, c), point_dist(b, c)});
                if (d <= cap) simplices.push_back({d, 2, {a, b, c}});
            }
    std::sort(simplices.begin(), simplices.end(), [](const Simplex& x, const Simplex& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.dim != y.dim) return x.dim < y.dim;
        return x.v < y.v;
    });

    std::map<std::array<std::uint32_t, 4>, std::uint32_t> index_of;
    for (std::uint32_t i = 0; i < simplices.size(); ++i) {
        const Simplex& s = simplices[i];
        index_of[{static_cast<std::uint32_t>(s.dim), s.v[0], s.v[1], s.v[2]}] = i;
    }
    auto face_index = [&](int dim, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        return index_of.at({static_cast<std::uint32_t>(dim), a, b, c});
    };

    auto boundary = [&](const Simplex& s) {
        std::vector<std::uint32_t> col;
        if (s.dim == 1) {
            col = {face_index(0, s.v[0], 0, 0), face_index(0, s.v[1], 0, 0)};
        } else if (s.dim == 2) {
            col = {face_index(1, s.v[0], s.v[1], 0), face_index(1, s.v[0], s.v[2], 0),
                   face_index(1, s.v[1], s.v[2], 0)};
        }
        std::sort(col.begin(), col.end());
        return col;
    };

    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::size_t m = simplices.size();
    std::vector<std::vector<std::uint32_t>> reduced(m);
    std::vector<std::uint32_t> pivot_owner(m, kNone);  // row -> column that has it as pivot
    std::vector<char> is_positive(m, 0);

    for (std::uint32_t j = 0; j < m; ++j) {
        std::vector<std::uint32_t> col = boundary(simplices[j]);
        while (!col.empty() && pivot_owner[col.back()] != kNone) {
            const auto& other = reduced[pivot_owner[col.back()]];
            std::vector<std::uint32_t> merged;
            std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                          std::back_inserter(merged));
            col = std::move(merged);
        }
        if (col.empty()) {
            is_positive[j] = 1;
        } else {
            pivot_owner[col.back()] = j;
            reduced[j] = std::move(col);
        }
    }

    PersistenceDiagram dg;
    dg.cap = cap;
    auto keep = [&](double birth, double death) { return !drop_zero || death > birth; };
    for (std::uint32_t i = 0; i < m; ++i) {
        const Simplex& s = simplices[i];
        if (!is_positive[i]) continue;
        double birth = s.value;
        double death = pivot_owner[i] != kNone ? simplices[pivot_owner[i]].value : cap;
        if (s.dim == 0 && keep(birth, death)) dg.h0.push_back({birth, death});
        if (s.dim == 1 && max_dim >= 1 && keep(birth, death)) dg.h1.push_back({birth, death});
    }
    std::sort(dg.h0.begin(), dg.h0.end(), [](const PersistencePair& x, const PersistencePair& y) {
        return x.death < y.death;
    });
    std::sort(dg.h1.begin(), dg.h1.end(), [](const PersistencePair& x, const PersistencePair& y) {
        if (x.birth != y.birth) return x.birth < y.birth;
        return x.death < y.death;
    });
    return dg;
}

}  // namespace tfr
