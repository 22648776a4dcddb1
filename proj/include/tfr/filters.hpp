#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "tfr/errors.hpp"

namespace tfr {

// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

using SosCascade = std::vector<Biquad>;

namespace detail {

using cplx = std::complex<double>;

// Analog Butterworth lowpass prototype poles, cutoff 1 rad/s, unit gain.
inline std::vector<cplx> butterworth_prototype(int order) {
    std::vector<cplx> poles;
    poles.reserve(order);
    for (int k = 0; k < order; ++k) {
        double theta = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

inline double prewarp(double freq_hz, double fs) {
    return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs);
}

inline cplx bilinear(cplx s, double fs) {
    double fs2 = 2.0 * fs;
    return (fs2 + s) / (fs2 - s);
}

// Groups a conjugate-symmetric pole set into real-coefficient quadratics
// (z^2 + a1 z + a2). Real poles are paired with each other after sorting.
inline std::vector<std::pair<double, double>> pair_poles(const std::vector<cplx>& poles) {
    std::vector<cplx> upper;
    std::vector<double> reals;
    for (const cplx& p : poles) {
        if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p.real())))
            reals.push_back(p.real());
        else if (p.imag() > 0.0)
            upper.push_back(p);
    }
    std::sort(reals.begin(), reals.end());
    std::sort(upper.begin(), upper.end(),
              [](const cplx& a, const cplx& b) { return std::abs(a) > std::abs(b); });
    std::vector<std::pair<double, double>> sections;
    for (const cplx& p : upper) sections.emplace_back(-2.0 * p.real(), std::norm(p));
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        sections.emplace_back(-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]);
    return sections;
}

inline void check_band(double low_hz, double high_hz, double fs) {
    double nyquist = fs / 2.0;
    if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < nyquist))
        throw NyquistViolation("band [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                               "] Hz invalid for sampling rate " + std::to_string(fs) + " Hz");
}

}  // namespace detail

// Complex frequency response of a cascade at freq_hz (single forward pass).
inline std::complex<double> sos_response(const SosCascade& sos, double freq_hz, double fs) {
    using detail::cplx;
    double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    cplx z1 = std::polar(1.0, -omega);
    cplx z2 = z1 * z1;
    cplx h(1.0, 0.0);
    for (const Biquad& s : sos)
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
}

// Butterworth band-pass. `order` is the analog prototype order; the digital
// filter has 2*order poles realized as `order` sections. Unity gain at the
// warped geometric band center.
inline SosCascade butter_bandpass(int order, double low_hz, double high_hz, double fs) {
    using detail::cplx;
    detail::check_band(low_hz, high_hz, fs);
    double w1 = detail::prewarp(low_hz, fs);
    double w2 = detail::prewarp(high_hz, fs);
    double bw = w2 - w1;
    double w0 = std::sqrt(w1 * w2);

    std::vector<cplx> analog;
    for (const cplx& p : detail::butterworth_prototype(order)) {
        cplx pb = p * bw * 0.5;
        cplx disc = std::sqrt(pb * pb - w0 * w0);
        analog.push_back(pb + disc);
        analog.push_back(pb - disc);
    }
    std::vector<cplx> digital;
    for (const cplx& s : analog) digital.push_back(detail::bilinear(s, fs));

    SosCascade sos;
    for (const auto& [a1, a2] : detail::pair_poles(digital)) {
        Biquad s;
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;  // zeros at z = +1 and z = -1
        s.a1 = a1;
        s.a2 = a2;
        sos.push_back(s);
    }
    double center_hz = fs / std::numbers::pi * std::atan(w0 / (2.0 * fs));
    double gain = std::abs(sos_response(sos, center_hz, fs));
    if (gain <= 0.0) throw NumericError("band-pass design degenerated to zero gain");
    for (Biquad& s : sos) {
        // spread the correction evenly to keep section gains balanced
        double g = std::pow(1.0 / gain, 1.0 / static_cast<double>(sos.size()));
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return sos;
}

// Butterworth band-stop (notch when the band is narrow). Unity gain at DC.
inline SosCascade butter_bandstop(int order, double low_hz, double high_hz, double fs) {
    using detail::cplx;
    detail::check_band(low_hz, high_hz, fs);
    double w1 = detail::prewarp(low_hz, fs);
    double w2 = detail::prewarp(high_hz, fs);
    double bw = w2 - w1;
    double w0 = std::sqrt(w1 * w2);

    std::vector<cplx> analog;
    for (const cplx& p : detail::butterworth_prototype(order)) {
        cplx b_half = bw / (2.0 * p);
        cplx disc = std::sqrt(b_half * b_half - w0 * w0);
        analog.push_back(b_half + disc);
        analog.push_back(b_half - disc);
    }
    std::vector<cplx> digital;
    for (const cplx& s : analog) digital.push_back(detail::bilinear(s, fs));

    double theta0 = 2.0 * std::atan(w0 / (2.0 * fs));
    double zb1 = -2.0 * std::cos(theta0);
    SosCascade sos;
    for (const auto& [a1, a2] : detail::pair_poles(digital)) {
        Biquad s;
        s.b0 = 1.0;
        s.b1 = zb1;  // conjugate zero pair on the unit circle at the notch frequency
        s.b2 = 1.0;
        s.a1 = a1;
        s.a2 = a2;
        sos.push_back(s);
    }
    double gain = std::abs(sos_response(sos, 0.0, fs));
    if (gain <= 0.0) throw NumericError("band-stop design degenerated to zero gain");
    for (Biquad& s : sos) {
        double g = std::pow(1.0 / gain, 1.0 / static_cast<double>(sos.size()));
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return sos;
}

// Single forward pass, direct form II transposed. Each section starts in the
// steady state it would reach under a constant input equal to its first input
// sample, so constant signals pass through with no start-up transient.
inline void sos_filter_inplace(const SosCascade& sos, std::span<double> x) {
    for (const Biquad& s : sos) {
        double z1 = 0.0, z2 = 0.0;
        if (!x.empty()) {
            double denom = 1.0 + s.a1 + s.a2;
            if (std::abs(denom) > 1e-12) {
                double y0 = (s.b0 + s.b1 + s.b2) / denom * x[0];
                z1 = y0 - s.b0 * x[0];
                z2 = s.b2 * x[0] - s.a2 * y0;
            }
        }
        for (double& v : x) {
            double in = v;
            double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

// Forward-backward (zero phase) filtering. The signal is extended at both
// ends by odd reflection through the endpoint, 3x the realized filter order,
// filtered in both directions, and trimmed back.
inline std::vector<double> filtfilt(const SosCascade& sos, std::span<const double> x) {
    std::size_t n = x.size();
    if (n == 0) return {};
    std::size_t pad = std::min<std::size_t>(3 * 2 * sos.size(), n > 1 ? n - 1 : 0);
    std::vector<double> ext(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    std::copy(x.begin(), x.end(), ext.begin() + pad);
    for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    sos_filter_inplace(sos, ext);
    std::reverse(ext.begin(), ext.end());
    sos_filter_inplace(sos, ext);
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + pad, ext.begin() + pad + n};
}

}  // namespace tfr
