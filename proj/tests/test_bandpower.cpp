#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "tfr/bandpower.hpp"

using namespace tfr;

namespace {

Epoch tone_epoch(double freq, double amp, double fs, std::size_t n, std::size_t n_ch) {
    Epoch ep;
    ep.valid_length = n;
    ep.data = Matrix(n, n_ch);
    for (std::size_t r = 0; r < n; ++r) {
        double v = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(r) / fs);
        for (std::size_t c = 0; c < n_ch; ++c) ep.data(r, c) = v;
    }
    return ep;
}

}  // namespace

TEST_CASE("in-band tone reports its log mean square power") {
    // amp 2 sine: mean square = amp^2/2 = 2, so the value is ln 2.
    double fs = 1200.0;
    Epoch ep = tone_epoch(75.0, 2.0, fs, 2400, 1);
    auto f = bandpower_features(ep, fs);
    REQUIRE(f.size() == 3);
    CHECK(f[0] == Catch::Approx(std::log(2.0)).margin(0.05));
    // Outside the other two bands at least 40 dB of power is gone. Window edge
    // transients, not the filter roll-off, set this floor.
    CHECK(f[1] < std::log(2.0) - std::log(1e4));
    CHECK(f[2] < std::log(2.0) - std::log(1e4));
}

TEST_CASE("feature order is channel-major") {
    double fs = 1200.0;
    std::size_t n = 2400;
    Epoch ep;
    ep.valid_length = n;
    ep.data = Matrix(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
        double t = static_cast<double>(r) / fs;
        ep.data(r, 0) = 2.0 * std::sin(2.0 * std::numbers::pi * 75.0 * t);   // band 0
        ep.data(r, 1) = 2.0 * std::sin(2.0 * std::numbers::pi * 125.0 * t);  // band 1
    }
    auto f = bandpower_features(ep, fs);
    REQUIRE(f.size() == 6);
    CHECK(f[0] == Catch::Approx(std::log(2.0)).margin(0.05));  // ch0 band0
    CHECK(f[1] < -8.5);                                        // ch0 band1
    CHECK(f[3] < -8.5);                                        // ch1 band0
    CHECK(f[4] == Catch::Approx(std::log(2.0)).margin(0.05));  // ch1 band1
}

TEST_CASE("silence floors at the epsilon") {
    double fs = 1200.0;
    Epoch ep;
    ep.valid_length = 1200;
    ep.data = Matrix(1200, 1);
    auto f = bandpower_features(ep, fs);
    REQUIRE(f.size() == 3);
    for (double v : f) CHECK(v == Catch::Approx(std::log(1e-12)).margin(1e-12));
}

TEST_CASE("only the valid region contributes") {
    double fs = 1200.0;
    // Tone occupies the first half; second half is padding that must be ignored.
    Epoch padded = tone_epoch(75.0, 2.0, fs, 2400, 1);
    for (std::size_t r = 1200; r < 2400; ++r) padded.data(r, 0) = 0.0;
    padded.valid_length = 1200;
    Epoch tight = tone_epoch(75.0, 2.0, fs, 1200, 1);
    auto fp = bandpower_features(padded, fs);
    auto ft = bandpower_features(tight, fs);
    REQUIRE(fp.size() == ft.size());
    for (std::size_t i = 0; i < fp.size(); ++i) CHECK(fp[i] == Catch::Approx(ft[i]).margin(1e-12));
    CHECK(fp[0] == Catch::Approx(std::log(2.0)).margin(0.05));
}

TEST_CASE("empty epochs are rejected") {
    Epoch ep;
    ep.valid_length = 0;
    ep.data = Matrix(100, 2);
    CHECK_THROWS_AS(bandpower_features(ep, 1200.0), EmptyEpoch);
    CHECK_THROWS_AS(channel_band_log_power({}, butter_bandpass(4, 60.0, 90.0, 1200.0)),
                    EmptyEpoch);
}

TEST_CASE("standard bands are the three gamma ranges") {
    auto b = standard_bands();
    REQUIRE(b.size() == 3);
    CHECK(b[0].low_hz == 60.0);
    CHECK(b[0].high_hz == 90.0);
    CHECK(b[1].low_hz == 110.0);
    CHECK(b[1].high_hz == 140.0);
    CHECK(b[2].low_hz == 160.0);
    CHECK(b[2].high_hz == 190.0);
}
