#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"

namespace tfr {

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
};

inline bool operator==(const PersistencePair& a, const PersistencePair& b) {
    return a.birth == b.birth && a.death == b.death;
}

// cap is the filtration ceiling; classes alive there are reported as dying
// at cap rather than at infinity.
struct PersistenceDiagram {
    std::vector<PersistencePair> h0;
    std::vector<PersistencePair> h1;
    double cap = 0.0;
};

// Dense symmetric Euclidean distance matrix, row-major n x n.
inline std::vector<double> pairwise_distances(const Matrix& cloud) {
    std::size_t n = cloud.rows(), d = cloud.cols();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* pi = cloud.row(i).data();
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* pj = cloud.row(j).data();
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double diff = pi[k] - pj[k];
                acc += diff * diff;
            }
            double v = std::sqrt(acc);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    return dist;
}

// min over vertices of the farthest distance from that vertex. Every
// 1-cycle is dead by this value: past it some vertex spans a cone over
// the whole complex.
inline double enclosing_radius(const std::vector<double>& dist, std::size_t n) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, dist[i * n + j]);
        best = std::min(best, worst);
    }
    return n ? best : 0.0;
}

namespace detail {

struct Dsu {
    std::vector<std::uint32_t> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    // returns false if already joined
    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a < b) std::swap(a, b);  // keep the smaller index as the root
        parent[a] = b;
        return true;
    }
};

struct RipsEdge {
    double len;
    std::uint32_t a, b;  // a < b
};

// Triangle cofacet with its filtration diameter; vertices a < b < c.
struct RipsTri {
    double diam;
    std::uint32_t a, b, c;
};

// Filtration order: diameter, then the vertex triple.
inline bool tri_before(const RipsTri& x, const RipsTri& y) {
    if (x.diam != y.diam) return x.diam < y.diam;
    if (x.a != y.a) return x.a < y.a;
    if (x.b != y.b) return x.b < y.b;
    return x.c < y.c;
}

inline bool tri_same(const RipsTri& x, const RipsTri& y) {
    return x.a == y.a && x.b == y.b && x.c == y.c;
}

inline std::uint64_t tri_key(const RipsTri& t) {
    return (static_cast<std::uint64_t>(t.a) << 42) | (static_cast<std::uint64_t>(t.b) << 21) |
           static_cast<std::uint64_t>(t.c);
}

// Min-heap over triangles in filtration order with Z/2 cancellation:
// popping removes every copy of the least entry and reports it only when
// its multiplicity is odd.
struct TriHeap {
    std::vector<RipsTri> heap;

    static bool later(const RipsTri& x, const RipsTri& y) { return tri_before(y, x); }

    void clear() { heap.clear(); }
    void push(const RipsTri& t) {
        heap.push_back(t);
        std::push_heap(heap.begin(), heap.end(), later);
    }
    bool pop_pivot(RipsTri& out) {
        while (!heap.empty()) {
            RipsTri top = heap.front();
            std::size_t count = 0;
            while (!heap.empty() && tri_same(heap.front(), top)) {
                std::pop_heap(heap.begin(), heap.end(), later);
                heap.pop_back();
                ++count;
            }
            if (count % 2 == 1) {
                out = top;
                return true;
            }
        }
        return false;
    }
};

}  // namespace detail

// Vietoris-Rips persistence over Euclidean point clouds, homology in
// dimensions 0 and max_dim (0 or 1), Z/2 coefficients. The filtration is
// truncated at the enclosing radius; the one essential component is
// reported as (0, cap). Pairs with birth == death are omitted unless
// drop_zero is false.
inline PersistenceDiagram vr_persistence(const Matrix& cloud, int max_dim = 1,
                                         bool drop_zero = true) {
    if (max_dim < 0 || max_dim > 1)
        throw DimensionUnsupported("homology dimension " + std::to_string(max_dim) +
                                   " not supported (0 or 1)");
    std::size_t n = cloud.rows();
    if (n == 0) throw EmptyEpoch("persistence of an empty point cloud");

    std::vector<double> dist = pairwise_distances(cloud);
    double cap = enclosing_radius(dist, n);

    PersistenceDiagram dg;
    dg.cap = cap;
    auto keep = [&](double birth, double death) { return !drop_zero || death > birth; };

    std::vector<detail::RipsEdge> edges;
    edges.reserve(n * (n - 1) / 2);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j) {
            double len = dist[i * n + j];
            if (len <= cap) edges.push_back({len, i, j});
        }
    std::sort(edges.begin(), edges.end(), [](const detail::RipsEdge& x, const detail::RipsEdge& y) {
        if (x.len != y.len) return x.len < y.len;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    detail::Dsu dsu(n);
    std::vector<char> edge_positive(edges.size(), 0);
    std::size_t n_positive = 0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (dsu.unite(edges[e].a, edges[e].b)) {
            if (keep(0.0, edges[e].len)) dg.h0.push_back({0.0, edges[e].len});
        } else {
            edge_positive[e] = 1;
            ++n_positive;
        }
    }
    if (keep(0.0, cap)) dg.h0.push_back({0.0, cap});
    std::sort(dg.h0.begin(), dg.h0.end(), [](const PersistencePair& x, const PersistencePair& y) {
        return x.death < y.death;
    });

    if (max_dim < 1 || n < 3) return dg;

    // (edge, triangle) pairs come from reducing the coboundary matrix:
    // cycle-creating edges in reverse filtration order, each column holding
    // the edge's triangle cofacets. The pairing is the same as for the
    // boundary matrix, but columns and fill-in scale with edges rather than
    // with triangles, and most columns claim their pivot untouched.
    auto push_cofacets = [&](detail::TriHeap& heap, const detail::RipsEdge& e,
                             const detail::RipsTri* skip) {
        for (std::uint32_t v = 0; v < n; ++v) {
            if (v == e.a || v == e.b) continue;
            double da = dist[e.a * n + v];
            double db = dist[e.b * n + v];
            if (da > cap || db > cap) continue;
            detail::RipsTri t;
            t.diam = std::max({e.len, da, db});
            t.a = e.a;
            t.b = e.b;
            t.c = v;
            if (t.b < t.a) std::swap(t.a, t.b);
            if (t.c < t.b) std::swap(t.b, t.c);
            if (t.b < t.a) std::swap(t.a, t.b);
            if (skip != nullptr && detail::tri_same(t, *skip)) continue;
            heap.push(t);
        }
    };

    // A pivot's owner either claimed its raw coboundary untouched (pure,
    // re-enumerated on demand) or stores its reduced column.
    struct Owner {
        std::uint32_t edge;
        std::int32_t column;  // -1 when pure
    };
    std::unordered_map<std::uint64_t, Owner> owner_of;
    owner_of.reserve(n_positive);
    std::vector<std::vector<detail::RipsTri>> stored;
    detail::TriHeap heap;

    for (std::size_t ei = edges.size(); ei-- > 0;) {
        if (!edge_positive[ei]) continue;
        const detail::RipsEdge& e = edges[ei];
        heap.clear();
        push_cofacets(heap, e, nullptr);
        bool reduced = false;
        for (;;) {
            detail::RipsTri pivot;
            if (!heap.pop_pivot(pivot)) {
                // No triangle kills this cycle below the ceiling.
                if (keep(e.len, cap)) dg.h1.push_back({e.len, cap});
                break;
            }
            auto it = owner_of.find(detail::tri_key(pivot));
            if (it == owner_of.end()) {
                if (keep(e.len, pivot.diam)) dg.h1.push_back({e.len, pivot.diam});
                Owner ow{static_cast<std::uint32_t>(ei), -1};
                if (reduced) {
                    std::vector<detail::RipsTri> col{pivot};
                    detail::RipsTri rest;
                    while (heap.pop_pivot(rest)) col.push_back(rest);
                    ow.column = static_cast<std::int32_t>(stored.size());
                    stored.push_back(std::move(col));
                }
                owner_of.emplace(detail::tri_key(pivot), ow);
                break;
            }
            const Owner& ow = it->second;
            if (ow.column < 0) {
                push_cofacets(heap, edges[ow.edge], &pivot);
            } else {
                for (const detail::RipsTri& t : stored[ow.column])
                    if (!detail::tri_same(t, pivot)) heap.push(t);
            }
            reduced = true;
        }
    }
    std::sort(dg.h1.begin(), dg.h1.end(), [](const PersistencePair& x, const PersistencePair& y) {
        if (x.birth != y.birth) return x.birth < y.birth;
        return x.death < y.death;
    });
    return dg;
}

}  // namespace tfr
