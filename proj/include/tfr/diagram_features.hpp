#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/persistence.hpp"

namespace tfr {

// Shared knobs for all diagram vectorizations. sigma <= 0 means one tenth
// of the diagram's filtration ceiling.
struct AmplitudeParams {
    double p = 2.0;
    std::size_t grid_size = 100;
    std::size_t layers = 2;
    double sigma = 0.0;
    double weight_power = 1.0;
};

namespace detail {

// Accumulating in a fixed order keeps every feature a pure function of the
// multiset: shuffled input produces bit-identical output.
inline std::vector<PersistencePair> canonical(const std::vector<PersistencePair>& pairs) {
    std::vector<PersistencePair> sorted = pairs;
    std::sort(sorted.begin(), sorted.end(), [](const PersistencePair& a, const PersistencePair& b) {
        return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
    });
    return sorted;
}

inline double lp_of_samples(const std::vector<double>& samples, double p, double step) {
    double acc = 0.0;
    for (double v : samples) acc += std::pow(std::abs(v), p);
    return std::pow(acc, 1.0 / p) * std::pow(step, 1.0 / p);
}

}  // namespace detail

// Half the longest lifetime.
inline double bottleneck_amplitude(const std::vector<PersistencePair>& pairs) {
    double best = 0.0;
    for (const PersistencePair& pr : pairs) best = std::max(best, pr.death - pr.birth);
    return best / 2.0;
}

// L_p norm of the distances to the diagonal, each (d - b) / sqrt(2).
inline double wasserstein_amplitude(const std::vector<PersistencePair>& pairs, double p = 2.0) {
    if (pairs.empty()) return 0.0;
    double acc = 0.0;
    for (const PersistencePair& pr : detail::canonical(pairs))
        acc += std::pow((pr.death - pr.birth) / std::numbers::sqrt2, p);
    return std::pow(acc, 1.0 / p);
}

// Discrete L_p norm of the rank curve t -> #{i : b_i <= t < d_i} sampled on
// grid_size evenly spaced values over [0, cap].
inline double betti_amplitude(const std::vector<PersistencePair>& pairs, double cap,
                              double p = 2.0, std::size_t grid_size = 100) {
    if (pairs.empty() || cap <= 0.0 || grid_size < 2) return 0.0;
    double step = cap / static_cast<double>(grid_size - 1);
    std::vector<double> curve(grid_size, 0.0);
    for (std::size_t k = 0; k < grid_size; ++k) {
        double t = step * static_cast<double>(k);
        int count = 0;
        for (const PersistencePair& pr : pairs)
            if (pr.birth <= t && t < pr.death) ++count;
        curve[k] = count;
    }
    return detail::lp_of_samples(curve, p, step);
}

// Discrete L_p norm of the first `layers` landscape functions stacked,
// sampled over [0, cap]. Layer k at t is the k-th largest tent value
// max(0, min(t - b, d - t)).
inline double landscape_amplitude(const std::vector<PersistencePair>& pairs, double cap,
                                  double p = 2.0, std::size_t grid_size = 100,
                                  std::size_t layers = 2) {
    if (pairs.empty() || cap <= 0.0 || grid_size < 2 || layers == 0) return 0.0;
    double step = cap / static_cast<double>(grid_size - 1);
    std::vector<double> samples;
    samples.reserve(grid_size * layers);
    std::vector<double> tents(pairs.size());
    for (std::size_t k = 0; k < grid_size; ++k) {
        double t = step * static_cast<double>(k);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            tents[i] = std::max(0.0, std::min(t - pairs[i].birth, pairs[i].death - t));
        std::size_t top = std::min(layers, tents.size());
        std::partial_sort(tents.begin(), tents.begin() + top, tents.end(), std::greater<>());
        for (std::size_t l = 0; l < layers; ++l)
            samples.push_back(l < top ? tents[l] : 0.0);
    }
    return detail::lp_of_samples(samples, p, step);
}

// Discrete L_p norm over [0, cap] of the lifetime-weighted sum of tent
// functions, weights (d - b)^weight_power. The sum is deliberately not
// divided by the total weight: that keeps the value monotone under adding
// pairs to the diagram.
inline double silhouette_amplitude(const std::vector<PersistencePair>& pairs, double cap,
                                   double p = 2.0, std::size_t grid_size = 100,
                                   double weight_power = 1.0) {
    if (pairs.empty() || cap <= 0.0 || grid_size < 2) return 0.0;
    auto sorted = detail::canonical(pairs);
    std::vector<double> weights(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        weights[i] = std::pow(sorted[i].death - sorted[i].birth, weight_power);
    double step = cap / static_cast<double>(grid_size - 1);
    std::vector<double> curve(grid_size, 0.0);
    for (std::size_t k = 0; k < grid_size; ++k) {
        double t = step * static_cast<double>(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i)
            acc += weights[i] * std::max(0.0, std::min(t - sorted[i].birth, sorted[i].death - t));
        curve[k] = acc;
    }
    return detail::lp_of_samples(curve, p, step);
}

// L2 norm of the Gaussian-smoothed signed diagram raster: +1 mass at each
// (b, d), -1 at the mirror (d, b), smoothed with an isotropic Gaussian and
// integrated over the square spanning the diagram. The smoothing is
// separable, so the raster is convolved once per axis.
inline double heat_amplitude(const std::vector<PersistencePair>& pairs, double cap,
                             std::size_t grid_size, double sigma) {
    if (pairs.empty() || cap <= 0.0 || grid_size < 2 || sigma <= 0.0) return 0.0;
    std::size_t gs = grid_size;
    double delta = cap / static_cast<double>(gs);
    std::vector<double> img(gs * gs, 0.0);
    auto cell = [&](double v) {
        auto k = static_cast<long long>(std::floor(v / delta));
        return static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(gs) - 1));
    };
    for (const PersistencePair& pr : pairs) {
        img[cell(pr.birth) * gs + cell(pr.death)] += 1.0;
        img[cell(pr.death) * gs + cell(pr.birth)] -= 1.0;
    }
    auto radius = static_cast<long long>(std::ceil(4.0 * sigma / delta));
    radius = std::min<long long>(radius, static_cast<long long>(gs) - 1);
    std::vector<double> kernel(radius + 1);
    double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (long long j = 0; j <= radius; ++j) {
        double x = static_cast<double>(j) * delta;
        kernel[static_cast<std::size_t>(j)] = norm * std::exp(-x * x / (2.0 * sigma * sigma));
    }
    auto convolve_rows = [&](const std::vector<double>& src, std::vector<double>& dst) {
        for (std::size_t row = 0; row < gs; ++row) {
            const double* s = src.data() + row * gs;
            double* d = dst.data() + row * gs;
            for (long long k = 0; k < static_cast<long long>(gs); ++k) {
                double acc = 0.0;
                long long lo = std::max<long long>(0, k - radius);
                long long hi = std::min<long long>(static_cast<long long>(gs) - 1, k + radius);
                for (long long src_k = lo; src_k <= hi; ++src_k)
                    acc += s[src_k] * kernel[static_cast<std::size_t>(std::llabs(k - src_k))];
                d[static_cast<std::size_t>(k)] = acc;
            }
        }
    };
    std::vector<double> tmp(gs * gs, 0.0);
    convolve_rows(img, tmp);
    // transpose, convolve, transpose back; reuse img as scratch
    for (std::size_t i = 0; i < gs; ++i)
        for (std::size_t j = 0; j < gs; ++j) img[j * gs + i] = tmp[i * gs + j];
    convolve_rows(img, tmp);
    double sum_sq = 0.0;
    for (double v : tmp) sum_sq += v * v;
    return delta * std::sqrt(sum_sq);
}

// Shannon entropy of the normalized lifetimes, in nats.
inline double persistence_entropy(const std::vector<PersistencePair>& pairs) {
    auto sorted = detail::canonical(pairs);
    double total = 0.0;
    for (const PersistencePair& pr : sorted) total += pr.death - pr.birth;
    if (total <= 0.0) return 0.0;
    double e = 0.0;
    for (const PersistencePair& pr : sorted) {
        double frac = (pr.death - pr.birth) / total;
        if (frac > 0.0) e -= frac * std::log(frac);
    }
    return e;
}

// Entropy divided by its maximum ln(m); zero for fewer than two points.
inline double normalized_persistence_entropy(const std::vector<PersistencePair>& pairs) {
    if (pairs.size() < 2) return 0.0;
    return persistence_entropy(pairs) / std::log(static_cast<double>(pairs.size()));
}

constexpr std::size_t kDiagramFeatureCount = 18;

inline std::string diagram_feature_name(std::size_t id) {
    static const char* metric[] = {"bottleneck", "wasserstein", "betti", "landscape",
                                   "silhouette", "heat"};
    std::size_t dim = id % 2;
    std::string suffix = "_h" + std::to_string(dim);
    if (id < 12) return std::string("tda_") + metric[id / 2] + suffix;
    if (id < 14) return "tda_entropy_norm" + suffix;
    if (id < 16) return "tda_entropy" + suffix;
    if (id < 18) return "tda_count" + suffix;
    throw OutOfBounds("diagram feature id " + std::to_string(id));
}

// The 18 per-diagram features, ordered by feature id: six amplitudes
// interleaved over homology dimension, then normalized entropy, entropy,
// and point count for each dimension.
inline std::vector<double> diagram_feature_vector(const PersistenceDiagram& dg,
                                                  const AmplitudeParams& params = {}) {
    double sigma = params.sigma > 0.0 ? params.sigma : dg.cap / 10.0;
    std::vector<double> out;
    out.reserve(kDiagramFeatureCount);
    const std::vector<PersistencePair>* dims[2] = {&dg.h0, &dg.h1};
    for (int d = 0; d < 2; ++d) out.push_back(bottleneck_amplitude(*dims[d]));
    for (int d = 0; d < 2; ++d) out.push_back(wasserstein_amplitude(*dims[d], params.p));
    for (int d = 0; d < 2; ++d)
        out.push_back(betti_amplitude(*dims[d], dg.cap, params.p, params.grid_size));
    for (int d = 0; d < 2; ++d)
        out.push_back(landscape_amplitude(*dims[d], dg.cap, params.p, params.grid_size, params.layers));
    for (int d = 0; d < 2; ++d)
        out.push_back(
            silhouette_amplitude(*dims[d], dg.cap, params.p, params.grid_size, params.weight_power));
    for (int d = 0; d < 2; ++d) out.push_back(heat_amplitude(*dims[d], dg.cap, params.grid_size, sigma));
    for (int d = 0; d < 2; ++d) out.push_back(normalized_persistence_entropy(*dims[d]));
    for (int d = 0; d < 2; ++d) out.push_back(persistence_entropy(*dims[d]));
    for (int d = 0; d < 2; ++d) out.push_back(static_cast<double>(dims[d]->size()));
    return out;
}

}  // namespace tfr
