#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/filters.hpp"
#include "tfr/signal.hpp"

namespace tfr {

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

inline std::vector<Band> standard_bands() {
    return {{60.0, 90.0}, {110.0, 140.0}, {160.0, 190.0}};
}

// Log mean squared amplitude of one channel restricted to a band. Filtering
// and averaging use only the valid (un-padded) part of the epoch.
// The floor keeps the logarithm finite on silent channels.
inline double channel_band_log_power(std::span<const double> valid_signal, const SosCascade& sos,
                                     double eps = 1e-12) {
    if (valid_signal.empty()) throw EmptyEpoch("band power of an empty window");
    std::vector<double> y = filtfilt(sos, valid_signal);
    double acc = 0.0;
    for (double v : y) acc += v * v;
    double mean_sq = acc / static_cast<double>(y.size());
    return std::log(std::max(mean_sq, eps));
}

// One value per (channel, band), channel-major:
// [ch0 b0, ch0 b1, ..., ch0 bK, ch1 b0, ...].
inline std::vector<double> bandpower_features(const Epoch& epoch, double sampling_rate,
                                              const std::vector<Band>& bands = standard_bands(),
                                              int order = 4, double eps = 1e-12) {
    if (epoch.valid_length == 0) throw EmptyEpoch("epoch has no valid samples");
    std::vector<SosCascade> cascades;
    cascades.reserve(bands.size());
    for (const Band& b : bands)
        cascades.push_back(butter_bandpass(order, b.low_hz, b.high_hz, sampling_rate));

    std::size_t n_ch = epoch.data.cols();
    std::vector<double> chan(epoch.valid_length);
    std::vector<double> out;
    out.reserve(n_ch * bands.size());
    for (std::size_t c = 0; c < n_ch; ++c) {
        for (std::size_t r = 0; r < epoch.valid_length; ++r) chan[r] = epoch.data(r, c);
        for (const SosCascade& sos : cascades)
            out.push_back(channel_band_log_power(chan, sos, eps));
    }
    return out;
}

}  // namespace tfr
