#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "tfr/random.hpp"
#include "tfr/signal.hpp"

using namespace tfr;

namespace {

std::string temp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

Recording make_recording(std::size_t n_samples, std::size_t n_channels, std::uint64_t seed) {
    Recording rec;
    rec.sampling_rate = 1200.0;
    rec.samples = Matrix(n_samples, n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) rec.channel_names.push_back("ch" + std::to_string(c));
    auto rng = make_rng(seed, 0);
    for (std::size_t r = 0; r < n_samples; ++r)
        for (std::size_t c = 0; c < n_channels; ++c)
            rec.samples(r, c) = static_cast<double>(rng() >> 11) / 9007199254740992.0 * 2.0 - 1.0;
    return rec;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& stem) : path(temp_path(stem)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("csv recording round-trips exactly") {
    Recording rec = make_recording(64, 3, 7);
    rec.samples(5, 1) = 1e-17;
    rec.samples(6, 2) = -123456.789012345678;
    TempFile f("tfr_test_rec.csv");
    save_recording_csv(f.path, rec);
    Recording back = load_recording_csv(f.path, rec.sampling_rate);
    REQUIRE(back.channel_names == rec.channel_names);
    REQUIRE(back.n_samples() == rec.n_samples());
    REQUIRE(back.n_channels() == rec.n_channels());
    for (std::size_t r = 0; r < rec.n_samples(); ++r)
        for (std::size_t c = 0; c < rec.n_channels(); ++c)
            REQUIRE(back.samples(r, c) == rec.samples(r, c));
}

TEST_CASE("csv recording rejects ragged rows") {
    TempFile f("tfr_test_ragged.csv");
    write_text(f.path, "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(load_recording_csv(f.path, 100.0), InconsistentChannelCount);
}

TEST_CASE("raw recording round-trips exactly") {
    Recording rec = make_recording(200, 5, 11);
    TempFile f("tfr_test_rec.raw");
    save_recording_raw(f.path, rec);
    Recording back = load_recording_raw(f.path);
    REQUIRE(back.sampling_rate == rec.sampling_rate);
    REQUIRE(back.n_samples() == 200);
    REQUIRE(back.n_channels() == 5);
    for (std::size_t r = 0; r < rec.n_samples(); ++r)
        for (std::size_t c = 0; c < rec.n_channels(); ++c)
            REQUIRE(back.samples(r, c) == rec.samples(r, c));
    // Generic channel names are synthesized on load.
    REQUIRE(back.channel_names.size() == 5);
}

TEST_CASE("raw loader rejects corrupt headers") {
    TempFile f("tfr_test_bad.raw");
    write_text(f.path, "BAD!");
    CHECK_THROWS_AS(load_recording_raw(f.path), ParseError);

    std::string hdr = "TFR1";
    hdr += std::string(12, '\0');
    hdr += "xyz";  // payload not a multiple of 8*channels
    TempFile g("tfr_test_bad2.raw");
    write_text(g.path, hdr);
    CHECK_THROWS_AS(load_recording_raw(g.path), ParseError);

    CHECK_THROWS_AS(load_recording_raw(temp_path("tfr_test_missing.raw")), IOFailure);
}

TEST_CASE("events round-trip and header is enforced") {
    std::vector<Event> events{{0, 2400, "rock"}, {4800, 1800, "paper"}, {9600, 2400, "rest"}};
    TempFile f("tfr_test_events.csv");
    save_events_csv(f.path, events);
    auto back = load_events_csv(f.path);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].onset_sample == events[i].onset_sample);
        CHECK(back[i].duration_samples == events[i].duration_samples);
        CHECK(back[i].label == events[i].label);
    }

    TempFile g("tfr_test_events_bad.csv");
    write_text(g.path, "onset,duration,label\n0,10,a\n");
    CHECK_THROWS_AS(load_events_csv(g.path), ParseError);
}

TEST_CASE("common average reference zeroes every sample's channel mean") {
    Recording rec = make_recording(500, 8, 3);
    car_filter(rec);
    for (std::size_t r = 0; r < rec.n_samples(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < rec.n_channels(); ++c) sum += rec.samples(r, c);
        REQUIRE(std::abs(sum) < 1e-9);
    }

    Recording one = make_recording(10, 1, 3);
    CHECK_THROWS_AS(car_filter(one), TooFewChannels);
}

TEST_CASE("car removes exactly the shared component") {
    // channel k = private_k + shared; CAR must recover private_k minus the
    // mean of the privates.
    std::size_t n = 100, ch = 4;
    Recording rec;
    rec.sampling_rate = 1200.0;
    rec.samples = Matrix(n, ch);
    for (std::size_t c = 0; c < ch; ++c) rec.channel_names.push_back("c" + std::to_string(c));
    std::vector<double> shared(n);
    Matrix priv(n, ch);
    auto rng = make_rng(17, 0);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
    for (std::size_t r = 0; r < n; ++r) {
        shared[r] = unit() * 10.0;
        for (std::size_t c = 0; c < ch; ++c) {
            priv(r, c) = unit();
            rec.samples(r, c) = priv(r, c) + shared[r];
        }
    }
    car_filter(rec);
    for (std::size_t r = 0; r < n; ++r) {
        double mean_priv = 0.0;
        for (std::size_t c = 0; c < ch; ++c) mean_priv += priv(r, c);
        mean_priv /= static_cast<double>(ch);
        for (std::size_t c = 0; c < ch; ++c)
            REQUIRE(rec.samples(r, c) == Catch::Approx(priv(r, c) - mean_priv).margin(1e-9));
    }
}

TEST_CASE("notch cascade suppresses the line fundamental and harmonics") {
    double fs = 1200.0;
    std::size_t n = 9600;
    Recording rec;
    rec.sampling_rate = fs;
    rec.channel_names = {"a", "b"};
    rec.samples = Matrix(n, 2);
    std::vector<double> clean(n);
    for (std::size_t r = 0; r < n; ++r) {
        double t = static_cast<double>(r) / fs;
        clean[r] = std::sin(2.0 * std::numbers::pi * 17.0 * t);
        double line = 0.0;
        for (int k = 1; k <= 6; ++k)
            line += std::sin(2.0 * std::numbers::pi * 50.0 * k * t + 0.3 * k);
        rec.samples(r, 0) = clean[r] + line;
        rec.samples(r, 1) = line;
    }
    notch_cascade(rec);
    // Channel 1 carried only line noise: at least 40 dB must be gone.
    double resid = 0.0, orig = 0.0;
    for (std::size_t r = n / 4; r < 3 * n / 4; ++r) {
        resid += rec.samples(r, 1) * rec.samples(r, 1);
        orig += clean[r] * clean[r];
    }
    CHECK(std::sqrt(resid) < 0.01 * std::sqrt(orig * 6.0));
    // Channel 0's 17 Hz content survives nearly untouched.
    double err = 0.0;
    for (std::size_t r = n / 4; r < 3 * n / 4; ++r) {
        double d = rec.samples(r, 0) - rec.samples(r, 1) - clean[r];
        err += d * d;
    }
    CHECK(std::sqrt(err / static_cast<double>(n / 2)) < 0.02);
}

TEST_CASE("segmentation cuts, pads, and validates") {
    Recording rec = make_recording(4800, 3, 5);  // 4 s at 1200 Hz

    SECTION("full-length event fills the window") {
        auto eps = segment_epochs(rec, {{0, 2400, "rock"}}, 2.0);
        REQUIRE(eps.size() == 1);
        CHECK(eps[0].data.rows() == 2400);
        CHECK(eps[0].data.cols() == 3);
        CHECK(eps[0].valid_length == 2400);
        CHECK(eps[0].label == "rock");
        for (std::size_t r = 0; r < 2400; ++r)
            REQUIRE(eps[0].data(r, 1) == rec.samples(r, 1));
    }

    SECTION("short event zero-pads the tail") {
        auto eps = segment_epochs(rec, {{100, 1800, "paper"}}, 2.0);
        REQUIRE(eps[0].valid_length == 1800);
        REQUIRE(eps[0].data.rows() == 2400);
        for (std::size_t r = 0; r < 1800; ++r)
            REQUIRE(eps[0].data(r, 0) == rec.samples(100 + r, 0));
        for (std::size_t r = 1800; r < 2400; ++r)
            for (std::size_t c = 0; c < 3; ++c) REQUIRE(eps[0].data(r, c) == 0.0);
    }

    SECTION("event that runs off the end is clipped to what exists") {
        auto eps = segment_epochs(rec, {{4000, 2400, "x"}}, 2.0);
        REQUIRE(eps[0].valid_length == 800);
        for (std::size_t r = 800; r < 2400; ++r) REQUIRE(eps[0].data(r, 2) == 0.0);
    }

    SECTION("window longer than the duration keeps duration") {
        auto eps = segment_epochs(rec, {{0, 600, "y"}}, 2.0);
        REQUIRE(eps[0].valid_length == 600);
    }

    SECTION("bad events throw") {
        CHECK_THROWS_AS(segment_epochs(rec, {{-1, 100, "z"}}, 2.0), EventOutOfRange);
        CHECK_THROWS_AS(segment_epochs(rec, {{4800, 100, "z"}}, 2.0), EventOutOfRange);
        CHECK_THROWS_AS(segment_epochs(rec, {{0, 0, "z"}}, 2.0), EventOutOfRange);
        CHECK_THROWS_AS(segment_epochs(rec, {{0, -5, "z"}}, 2.0), EventOutOfRange);
    }
}

TEST_CASE("standard preprocessing variants are fixed") {
    auto v = standard_variants();
    REQUIRE(v.size() == 4);
    CHECK(v[0].name == "v1");
    CHECK(v[0].low_hz == 1.0);
    CHECK(v[0].high_hz == 500.0);
    CHECK(v[0].use_car);
    CHECK(v[1].low_hz == 100.0);
    CHECK(v[2].low_hz == 50.0);
    CHECK(v[2].high_hz == 300.0);
    CHECK_FALSE(v[3].use_car);
}
