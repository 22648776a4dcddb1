#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/random.hpp"

namespace tfr {

struct ParamSpec {
    enum class Kind { real, integer, categorical };
    Kind kind = Kind::real;
    std::string name;
    double lo = 0.0, hi = 1.0;          // real and integer bounds, inclusive
    std::vector<std::string> options;   // categorical

    static ParamSpec make_real(std::string name, double lo, double hi) {
        if (!(lo < hi)) throw SpecInvalid("real parameter '" + name + "' needs lo < hi");
        return {Kind::real, std::move(name), lo, hi, {}};
    }
    static ParamSpec make_integer(std::string name, long long lo, long long hi) {
        if (!(lo < hi)) throw SpecInvalid("integer parameter '" + name + "' needs lo < hi");
        return {Kind::integer, std::move(name), static_cast<double>(lo), static_cast<double>(hi), {}};
    }
    static ParamSpec make_categorical(std::string name, std::vector<std::string> options) {
        if (options.empty()) throw SpecInvalid("categorical parameter '" + name + "' needs options");
        return {Kind::categorical, std::move(name), 0.0, 0.0, std::move(options)};
    }
};

struct SearchSpace {
    std::vector<ParamSpec> params;
};

// One value per parameter; categoricals hold the option index.
using Assignment = std::vector<double>;

inline std::size_t encoded_dim(const SearchSpace& space) {
    std::size_t d = 0;
    for (const ParamSpec& p : space.params)
        d += p.kind == ParamSpec::Kind::categorical ? p.options.size() : 1;
    return d;
}

// Reals and integers min-max scale to [0,1]; categoricals expand one-hot.
inline std::vector<double> encode(const SearchSpace& space, const Assignment& a) {
    if (a.size() != space.params.size()) throw OutOfBounds("assignment arity mismatch");
    std::vector<double> x;
    x.reserve(encoded_dim(space));
    for (std::size_t i = 0; i < space.params.size(); ++i) {
        const ParamSpec& p = space.params[i];
        if (p.kind == ParamSpec::Kind::categorical) {
            auto idx = static_cast<long long>(a[i]);
            if (idx < 0 || idx >= static_cast<long long>(p.options.size()))
                throw OutOfBounds("parameter '" + p.name + "' option index out of range");
            for (std::size_t o = 0; o < p.options.size(); ++o)
                x.push_back(o == static_cast<std::size_t>(idx) ? 1.0 : 0.0);
        } else {
            if (a[i] < p.lo || a[i] > p.hi)
                throw OutOfBounds("parameter '" + p.name + "' value " + std::to_string(a[i]) +
                                  " outside [" + std::to_string(p.lo) + ", " +
                                  std::to_string(p.hi) + "]");
            x.push_back((a[i] - p.lo) / (p.hi - p.lo));
        }
    }
    return x;
}

// Inverse of encode up to rounding: integers round to the nearest level,
// categoricals snap to the largest one-hot weight (ties to the first).
inline Assignment decode(const SearchSpace& space, const std::vector<double>& x) {
    Assignment a;
    a.reserve(space.params.size());
    std::size_t pos = 0;
    for (const ParamSpec& p : space.params) {
        if (p.kind == ParamSpec::Kind::categorical) {
            std::size_t best = 0;
            for (std::size_t o = 1; o < p.options.size(); ++o)
                if (x[pos + o] > x[pos + best]) best = o;
            a.push_back(static_cast<double>(best));
            pos += p.options.size();
        } else {
            double v = p.lo + std::clamp(x[pos], 0.0, 1.0) * (p.hi - p.lo);
            if (p.kind == ParamSpec::Kind::integer) v = std::round(v);
            a.push_back(std::clamp(v, p.lo, p.hi));
            ++pos;
        }
    }
    return a;
}

namespace detail {

// Lower-triangular Cholesky in place; false when not positive definite.
inline bool cholesky(std::vector<double>& m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                m[i * n + i] = std::sqrt(s);
            } else {
                m[i * n + j] = s / m[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = 0.0;
    }
    return true;
}

inline void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
        b[i] = s / l[i * n + i];
    }
}

inline void solve_upper_t(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
        b[i] = s / l[i * n + i];
    }
}

inline double matern52(double r, double ell) {
    constexpr double sqrt5 = 2.23606797749978969;
    double s = sqrt5 * r / ell;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

}  // namespace detail

// Zero-mean Gaussian process on standardized objectives, Matern-5/2
// kernel with one shared length-scale, fit by maximizing the log marginal
// likelihood over (length-scale, noise) with a multi-start grid plus local
// refinement.
class GpSurrogate {
public:
    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
             double noise_floor = 1e-8) {
        if (x.size() < 2) throw SpecInvalid("surrogate needs at least 2 observations");
        x_ = x;
        n_ = x.size();
        y_mean_ = 0.0;
        for (double v : y) y_mean_ += v;
        y_mean_ /= static_cast<double>(n_);
        double var = 0.0;
        for (double v : y) var += (v - y_mean_) * (v - y_mean_);
        y_scale_ = std::sqrt(var / static_cast<double>(n_));
        if (y_scale_ <= 0.0) y_scale_ = 1.0;
        ys_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) ys_[i] = (y[i] - y_mean_) / y_scale_;

        dist_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                double d = point_dist(x_[i], x_[j]);
                dist_[i * n_ + j] = d;
                dist_[j * n_ + i] = d;
            }

        double best_lml = -std::numeric_limits<double>::infinity();
        double best_ell = 1.0, best_noise = 1e-4;
        for (double log_ell = -2.5; log_ell <= 1.51; log_ell += 0.5)
            for (double log_noise = std::log10(noise_floor); log_noise <= 0.01; log_noise += 1.0) {
                double lml = marginal_likelihood(std::pow(10.0, log_ell), std::pow(10.0, log_noise));
                if (lml > best_lml) {
                    best_lml = lml;
                    best_ell = std::pow(10.0, log_ell);
                    best_noise = std::pow(10.0, log_noise);
                }
            }
        double step = 0.25;
        for (int round = 0; round < 6; ++round) {
            bool moved = false;
            for (int dim = 0; dim < 2; ++dim)
                for (double sign : {1.0, -1.0}) {
                    double ell = best_ell * (dim == 0 ? std::pow(10.0, sign * step) : 1.0);
                    double noise = best_noise * (dim == 1 ? std::pow(10.0, sign * step) : 1.0);
                    noise = std::max(noise, noise_floor);
                    ell = std::clamp(ell, 1e-3, 100.0);
                    double lml = marginal_likelihood(ell, noise);
                    if (lml > best_lml) {
                        best_lml = lml;
                        best_ell = ell;
                        best_noise = noise;
                        moved = true;
                    }
                }
            if (!moved) step /= 2.0;
        }
        ell_ = best_ell;
        noise_ = best_noise;
        if (!factorize(ell_, noise_, l_))
            throw SingularKernel("kernel matrix is not positive definite even with jitter");
        alpha_ = ys_;
        detail::solve_lower(l_, n_, alpha_);
        detail::solve_upper_t(l_, n_, alpha_);
    }

    // Posterior mean and variance in the original objective units.
    std::pair<double, double> predict(const std::vector<double>& q) const {
        std::vector<double> k(n_);
        for (std::size_t i = 0; i < n_; ++i) k[i] = detail::matern52(point_dist(q, x_[i]), ell_);
        double mu = 0.0;
        for (std::size_t i = 0; i < n_; ++i) mu += k[i] * alpha_[i];
        std::vector<double> v = k;
        detail::solve_lower(l_, n_, v);
        double var = 1.0;
        for (std::size_t i = 0; i < n_; ++i) var -= v[i] * v[i];
        var = std::max(var, 0.0);
        return {y_mean_ + y_scale_ * mu, y_scale_ * y_scale_ * var};
    }

    double length_scale() const { return ell_; }
    double noise() const { return noise_; }

private:
    static double point_dist(const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }

    bool factorize(double ell, double noise, std::vector<double>& l) const {
        for (double jitter = 1e-12; jitter <= 1.01e-6; jitter *= 100.0) {
            l.assign(n_ * n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                l[i * n_ + i] = 1.0 + noise + jitter;
                for (std::size_t j = i + 1; j < n_; ++j) {
                    double k = detail::matern52(dist_[i * n_ + j], ell);
                    l[i * n_ + j] = k;
                    l[j * n_ + i] = k;
                }
            }
            if (detail::cholesky(l, n_)) return true;
        }
        return false;
    }

    double marginal_likelihood(double ell, double noise) const {
        std::vector<double> l;
        if (!factorize(ell, noise, l)) return -std::numeric_limits<double>::infinity();
        std::vector<double> a = ys_;
        detail::solve_lower(l, n_, a);
        detail::solve_upper_t(l, n_, a);
        double fit = 0.0;
        for (std::size_t i = 0; i < n_; ++i) fit += ys_[i] * a[i];
        double logdet = 0.0;
        for (std::size_t i = 0; i < n_; ++i) logdet += std::log(l[i * n_ + i]);
        return -0.5 * fit - logdet -
               0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi);
    }

    std::vector<std::vector<double>> x_;
    std::vector<double> ys_, dist_, l_, alpha_;
    std::size_t n_ = 0;
    double y_mean_ = 0.0, y_scale_ = 1.0;
    double ell_ = 1.0, noise_ = 1e-4;
};

// Expected improvement for maximization; zero in the noiseless-certainty
// limit.
inline double expected_improvement(double mu, double var, double best) {
    double sigma = std::sqrt(std::max(var, 0.0));
    if (sigma <= 0.0) return 0.0;
    double z = (mu - best) / sigma;
    double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    return std::max((mu - best) * cdf + sigma * phi, 0.0);
}

struct Trial {
    Assignment assignment;
    double objective = 0.0;
    bool ok = true;
};

struct OptimizationTrace {
    std::vector<Trial> trials;
    std::vector<double> best_so_far;  // running max over successful trials
    std::uint64_t seed = 0;
};

namespace detail {

inline Assignment random_assignment(const SearchSpace& space, std::mt19937_64& rng) {
    auto unit = [&]() {
        return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    };
    Assignment a;
    a.reserve(space.params.size());
    for (const ParamSpec& p : space.params) {
        switch (p.kind) {
            case ParamSpec::Kind::real:
                a.push_back(p.lo + unit() * (p.hi - p.lo));
                break;
            case ParamSpec::Kind::integer: {
                double span = p.hi - p.lo + 1.0;
                a.push_back(std::min(p.hi, std::floor(p.lo + unit() * span)));
                break;
            }
            case ParamSpec::Kind::categorical:
                a.push_back(static_cast<double>(rng() % p.options.size()));
                break;
        }
    }
    return a;
}

}  // namespace detail

// Sequential model-based optimization: seeded uniform warmup, then
// repeatedly fit the surrogate to all successful trials and evaluate the
// assignment maximizing expected improvement over 1024 random candidates
// refined by greedy coordinate moves.
inline OptimizationTrace optimize(const std::function<double(const Assignment&)>& objective,
                                  const SearchSpace& space, std::size_t n_calls,
                                  std::size_t n_initial = 10, std::uint64_t seed = 0,
                                  double noise_floor = 1e-8) {
    if (space.params.empty()) throw SpecInvalid("empty search space");
    if (n_initial < 2 || n_calls < n_initial)
        throw SpecInvalid("need n_calls >= n_initial >= 2");

    OptimizationTrace trace;
    trace.seed = seed;
    std::mt19937_64 rng = make_rng(seed, 0);
    double best = -std::numeric_limits<double>::infinity();

    auto evaluate = [&](const Assignment& a) {
        Trial t;
        t.assignment = a;
        try {
            t.objective = objective(a);
        } catch (const ObjectiveFailure&) {
            t.ok = false;
            t.objective = 0.0;
        }
        if (t.ok) best = std::max(best, t.objective);
        trace.trials.push_back(std::move(t));
        trace.best_so_far.push_back(best);
    };

    for (std::size_t i = 0; i < n_initial; ++i)
        evaluate(detail::random_assignment(space, rng));

    while (trace.trials.size() < n_calls) {
        std::vector<std::vector<double>> gx;
        std::vector<double> gy;
        for (const Trial& t : trace.trials)
            if (t.ok) {
                gx.push_back(encode(space, t.assignment));
                gy.push_back(t.objective);
            }
        if (gx.size() < 2) {
            evaluate(detail::random_assignment(space, rng));
            continue;
        }
        GpSurrogate gp;
        gp.fit(gx, gy, noise_floor);

        auto ei_of = [&](const Assignment& a) {
            auto [mu, var] = gp.predict(encode(space, a));
            return expected_improvement(mu, var, best);
        };
        Assignment proposal = detail::random_assignment(space, rng);
        double proposal_ei = ei_of(proposal);
        for (int c = 1; c < 1024; ++c) {
            Assignment cand = detail::random_assignment(space, rng);
            double e = ei_of(cand);
            if (e > proposal_ei) {
                proposal = std::move(cand);
                proposal_ei = e;
            }
        }
        for (double frac : {0.1, 0.02, 0.004}) {
            for (std::size_t pi = 0; pi < space.params.size(); ++pi) {
                const ParamSpec& p = space.params[pi];
                std::vector<double> tries;
                if (p.kind == ParamSpec::Kind::categorical) {
                    for (std::size_t o = 0; o < p.options.size(); ++o)
                        tries.push_back(static_cast<double>(o));
                } else {
                    double delta = p.kind == ParamSpec::Kind::integer
                                       ? std::max(1.0, std::round(frac * (p.hi - p.lo)))
                                       : frac * (p.hi - p.lo);
                    tries = {proposal[pi] - delta, proposal[pi] + delta};
                }
                for (double v : tries) {
                    Assignment cand = proposal;
                    cand[pi] = std::clamp(v, p.lo,
                                          p.kind == ParamSpec::Kind::categorical
                                              ? static_cast<double>(p.options.size() - 1)
                                              : p.hi);
                    if (p.kind == ParamSpec::Kind::integer) cand[pi] = std::round(cand[pi]);
                    double e = ei_of(cand);
                    if (e > proposal_ei) {
                        proposal = std::move(cand);
                        proposal_ei = e;
                    }
                }
            }
        }
        evaluate(proposal);
    }
    return trace;
}

}  // namespace tfr
