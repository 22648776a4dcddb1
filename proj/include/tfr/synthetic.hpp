#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"
#include "tfr/random.hpp"
#include "tfr/signal.hpp"

namespace tfr {

// Per-class generative signature. A burst is a Hann-windowed sinusoid that
// separates classes in band power; a loop is a constant-radius latent
// oscillator mixed through two orthonormal channel patterns, which traces a
// planar circle in the embedded cloud and separates classes in H1.
struct ClassSpec {
    std::string label;
    std::size_t trials = 0;
    double burst_hz = 0.0;  // 0 disables the burst
    double burst_amplitude = 0.0;
    double loop_hz = 0.0;  // 0 disables the loop
    double loop_radius = 0.0;
    double radius_jitter = 0.0;  // fractional, uniform in [1-j, 1+j] per trial
};

struct SyntheticSpec {
    std::size_t channels = 60;
    double sampling_rate = 1200.0;
    double noise_level = 1.0;
    double min_duration_s = 1.6;
    double max_duration_s = 2.4;
    double gap_s = 0.25;
    std::vector<ClassSpec> classes;
};

struct SyntheticSession {
    Recording recording;
    std::vector<Event> events;
};

// 180 trials, 90 rest and 30 per gesture. Rest is noise only. Rock and the
// two gestures sharing the 125 Hz burst are told apart by loop radius; the
// near-identical rock/paper radii are told apart by burst band. Neither
// feature family separates all four classes on its own.
inline SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.classes = {
        {"rest", 90, 0.0, 0.0, 0.0, 0.0, 0.0},
        {"rock", 30, 75.0, 2.0, 6.0, 18.0, 0.15},
        {"paper", 30, 125.0, 2.0, 6.0, 19.0, 0.15},
        {"scissors", 30, 125.0, 2.0, 6.0, 30.0, 0.15},
    };
    return spec;
}

namespace detail {

// Deterministic Box-Muller on top of the shared bit-stream convention;
// std::normal_distribution is implementation-defined and would break
// byte-identical reruns across standard libraries.
class GaussianDraw {
public:
    explicit GaussianDraw(std::mt19937_64 rng) : rng_(rng) {}

    double operator()() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
        double u2 = static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 rng_;
    bool have_ = false;
    double spare_ = 0.0;
};

inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Zero-mean unit-norm channel patterns, mutually orthogonal, so common
// average referencing cannot cancel a planted component and no component
// leaks into another's subspace.
inline std::vector<std::vector<double>> mixing_patterns(std::size_t count, std::size_t channels,
                                                        std::mt19937_64 rng) {
    GaussianDraw gauss(rng);
    std::vector<std::vector<double>> basis;
    basis.reserve(count);
    while (basis.size() < count) {
        std::vector<double> v(channels);
        for (double& x : v) x = gauss();
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(channels);
        for (double& x : v) x -= mean;
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t c = 0; c < channels; ++c) dot += v[c] * b[c];
            for (std::size_t c = 0; c < channels; ++c) v[c] -= dot * b[c];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;  // redraw on a degenerate projection
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis;
}

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
    if (spec.channels < 2) throw SpecInvalid("synthetic spec needs at least 2 channels");
    if (!(spec.sampling_rate > 0.0)) throw SpecInvalid("synthetic sampling_rate must be positive");
    if (!(spec.noise_level >= 0.0)) throw SpecInvalid("synthetic noise_level must be >= 0");
    if (!(spec.min_duration_s > 0.0) || spec.max_duration_s < spec.min_duration_s)
        throw SpecInvalid("synthetic durations need 0 < min <= max");
    if (!(spec.gap_s >= 0.0)) throw SpecInvalid("synthetic gap_s must be >= 0");
    if (spec.classes.empty()) throw SpecInvalid("synthetic spec needs at least one class");

    std::set<std::string> labels;
    std::set<std::tuple<double, double, double, double>> signatures;
    std::size_t patterns = 0;
    std::set<std::pair<double, double>> burst_keys;
    for (const ClassSpec& c : spec.classes) {
        if (c.label.empty()) throw SpecInvalid("synthetic class label must be non-empty");
        if (!labels.insert(c.label).second)
            throw SpecInvalid("duplicate synthetic class label '" + c.label + "'");
        if (c.trials == 0) throw SpecInvalid("class '" + c.label + "' needs at least one trial");
        if (c.burst_hz < 0.0 || c.burst_amplitude < 0.0 || c.loop_hz < 0.0 || c.loop_radius < 0.0)
            throw SpecInvalid("class '" + c.label + "' has a negative signature field");
        if (c.burst_hz >= spec.sampling_rate / 2.0)
            throw SpecInvalid("class '" + c.label + "' burst frequency is at or above Nyquist");
        if (c.radius_jitter < 0.0 || c.radius_jitter >= 1.0)
            throw SpecInvalid("class '" + c.label + "' radius_jitter must be in [0, 1)");
        bool burst = c.burst_hz > 0.0 && c.burst_amplitude > 0.0;
        bool loop = c.loop_hz > 0.0 && c.loop_radius > 0.0;
        if (!signatures
                 .insert({burst ? c.burst_hz : 0.0, burst ? c.burst_amplitude : 0.0,
                          loop ? c.loop_hz : 0.0, loop ? c.loop_radius : 0.0})
                 .second)
            throw SpecInvalid("class '" + c.label + "' duplicates another class's signature");
        if (burst) burst_keys.insert({c.burst_hz, c.burst_amplitude});
        if (loop) patterns += 2;
    }
    patterns += burst_keys.size();
    if (spec.channels < patterns + 1)
        throw SpecInvalid("synthetic spec needs channels > number of planted patterns");
}

}  // namespace detail

// Lays the shuffled trials end to end with silent gaps and returns the
// full recording plus one event per trial. Identical spec and seed give
// identical bytes.
inline SyntheticSession generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    detail::validate_synthetic_spec(spec);
    const double fs = spec.sampling_rate;
    const std::size_t n_ch = spec.channels;

    // Classes sharing (frequency, amplitude) share one spatial pattern:
    // their band-power signatures are then identical by construction, not
    // merely similar, so spectral features cannot tell them apart.
    std::map<std::pair<double, double>, std::size_t> burst_pattern;
    std::vector<std::size_t> loop_pattern(spec.classes.size(), 0);
    for (const ClassSpec& c : spec.classes)
        if (c.burst_hz > 0.0 && c.burst_amplitude > 0.0)
            burst_pattern.emplace(std::make_pair(c.burst_hz, c.burst_amplitude), 0);
    std::size_t n_patterns = 0;
    for (auto& [key, idx] : burst_pattern) idx = n_patterns++;
    for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
        const ClassSpec& c = spec.classes[ci];
        if (c.loop_hz > 0.0 && c.loop_radius > 0.0) {
            loop_pattern[ci] = n_patterns;
            n_patterns += 2;
        }
    }
    std::vector<std::vector<double>> patterns =
        detail::mixing_patterns(n_patterns, n_ch, make_rng(seed, 30));

    std::vector<std::size_t> trial_class;
    for (std::size_t ci = 0; ci < spec.classes.size(); ++ci)
        trial_class.insert(trial_class.end(), spec.classes[ci].trials, ci);
    {
        std::mt19937_64 rng = make_rng(seed, 10);
        for (std::size_t i = trial_class.size(); i > 1; --i)
            std::swap(trial_class[i - 1], trial_class[rng() % i]);
    }

    const std::size_t gap = static_cast<std::size_t>(std::llround(spec.gap_s * fs));
    std::vector<std::size_t> durations(trial_class.size());
    std::size_t total = gap;
    for (std::size_t i = 0; i < trial_class.size(); ++i) {
        std::mt19937_64 rng = make_rng(seed, 1000 + i);
        double d = spec.min_duration_s +
                   detail::unit_draw(rng) * (spec.max_duration_s - spec.min_duration_s);
        durations[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(d * fs)));
        total += durations[i] + gap;
    }

    SyntheticSession out;
    out.recording.sampling_rate = fs;
    out.recording.channel_names.reserve(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c)
        out.recording.channel_names.push_back("ch" + std::to_string(c));
    out.recording.samples = Matrix(total, n_ch);

    if (spec.noise_level > 0.0) {
        detail::GaussianDraw gauss(make_rng(seed, 20));
        std::vector<double>& raw = out.recording.samples.data();
        for (double& x : raw) x = spec.noise_level * gauss();
    }

    std::size_t cursor = gap;
    for (std::size_t i = 0; i < trial_class.size(); ++i) {
        const ClassSpec& c = spec.classes[trial_class[i]];
        const std::size_t dur = durations[i];
        std::mt19937_64 rng = make_rng(seed, 1000 + i);
        detail::unit_draw(rng);  // duration draw, consumed above
        const double burst_phase = 2.0 * std::numbers::pi * detail::unit_draw(rng);
        const double loop_phase = 2.0 * std::numbers::pi * detail::unit_draw(rng);
        const double radius =
            c.loop_radius * (1.0 + c.radius_jitter * (2.0 * detail::unit_draw(rng) - 1.0));

        const bool burst = c.burst_hz > 0.0 && c.burst_amplitude > 0.0;
        const bool loop = c.loop_hz > 0.0 && c.loop_radius > 0.0;
        const std::vector<double>* bv =
            burst ? &patterns[burst_pattern.at({c.burst_hz, c.burst_amplitude})] : nullptr;
        const std::vector<double>* lv1 = loop ? &patterns[loop_pattern[trial_class[i]]] : nullptr;
        const std::vector<double>* lv2 = loop ? &patterns[loop_pattern[trial_class[i]] + 1] : nullptr;

        // The loop keeps a constant radius so the embedded circle is clean;
        // short cosine ramps at the edges avoid step transients that would
        // ring through the acausal band-pass later. Kept well under one
        // loop period: a longer ramp traces an inward spiral whose crescent
        // against the circle reads as a second persistent cycle.
        const double ramp = std::min(0.02 * fs, static_cast<double>(dur) / 4.0);
        for (std::size_t t = 0; t < dur; ++t) {
            const double ts = static_cast<double>(t) / fs;
            double row_burst = 0.0;
            if (burst) {
                double env = std::sin(std::numbers::pi * static_cast<double>(t) /
                                      static_cast<double>(dur));
                env *= env;
                row_burst = c.burst_amplitude * env *
                            std::sin(2.0 * std::numbers::pi * c.burst_hz * ts + burst_phase);
            }
            double lx = 0.0, ly = 0.0;
            if (loop) {
                double env = 1.0;
                double dt = static_cast<double>(t);
                double tail = static_cast<double>(dur - 1 - t);
                if (dt < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * dt / ramp);
                else if (tail < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * tail / ramp);
                double a = 2.0 * std::numbers::pi * c.loop_hz * ts + loop_phase;
                lx = radius * env * std::cos(a);
                ly = radius * env * std::sin(a);
            }
            double* row = &out.recording.samples(cursor + t, 0);
            if (burst)
                for (std::size_t ch = 0; ch < n_ch; ++ch) row[ch] += row_burst * (*bv)[ch];
            if (loop)
                for (std::size_t ch = 0; ch < n_ch; ++ch)
                    row[ch] += lx * (*lv1)[ch] + ly * (*lv2)[ch];
        }

        Event ev;
        ev.onset_sample = static_cast<std::int64_t>(cursor);
        ev.duration_samples = static_cast<std::int64_t>(dur);
        ev.label = c.label;
        out.events.push_back(ev);
        cursor += dur + gap;
    }
    return out;
}

}  // namespace tfr
