#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tfr/csv.hpp"
#include "tfr/errors.hpp"
#include "tfr/filters.hpp"
#include "tfr/matrix.hpp"

namespace tfr {

// Multichannel recording; samples is n_samples x n_channels.
struct Recording {
    std::vector<std::string> channel_names;
    double sampling_rate = 0.0;
    Matrix samples;

    std::size_t n_samples() const { return samples.rows(); }
    std::size_t n_channels() const { return samples.cols(); }
};

struct Event {
    std::int64_t onset_sample = 0;
    std::int64_t duration_samples = 0;
    std::string label;
};

// Fixed-length window cut from a recording. Rows past valid_length are zero.
struct Epoch {
    Matrix data;  // window_len x n_channels
    std::string label;
    std::size_t valid_length = 0;
};

struct PreprocVariant {
    std::string name;
    double low_hz = 1.0;
    double high_hz = 500.0;
    bool use_car = true;
};

inline std::vector<PreprocVariant> standard_variants() {
    return {{"v1", 1.0, 500.0, true},
            {"v2", 100.0, 500.0, true},
            {"v3", 50.0, 300.0, true},
            {"v4", 1.0, 500.0, false}};
}

inline Recording load_recording_csv(const std::string& path, double sampling_rate) {
    CsvTable table = read_csv(path);
    Recording rec;
    rec.channel_names = table.header;
    rec.sampling_rate = sampling_rate;
    std::size_t n_ch = table.header.size();
    rec.samples = Matrix(table.rows.size(), n_ch);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != n_ch)
            throw InconsistentChannelCount("row " + std::to_string(r + 2) + " has " +
                                           std::to_string(table.rows[r].size()) + " fields, header has " +
                                           std::to_string(n_ch));
        for (std::size_t c = 0; c < n_ch; ++c)
            rec.samples(r, c) = parse_double(table.rows[r][c], r + 2);
    }
    return rec;
}

inline void save_recording_csv(const std::string& path, const Recording& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot write " + path);
    std::string buf;
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
        if (c) buf += ',';
        buf += csv_escape(rec.channel_names[c]);
    }
    buf += '\n';
    for (std::size_t r = 0; r < rec.n_samples(); ++r) {
        for (std::size_t c = 0; c < rec.n_channels(); ++c) {
            if (c) buf += ',';
            buf += format_double(rec.samples(r, c));
        }
        buf += '\n';
        if (buf.size() > (1u << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IOFailure("write failed: " + path);
}

namespace detail {

constexpr char kRawMagic[4] = {'T', 'F', 'R', '1'};

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Binary layout: 16-byte header (magic "TFR1", u32 channel count, u32
// sampling rate in Hz, u32 reserved zero, all little-endian), then
// channel-interleaved float64 samples. Sample count is implied by file size.
inline void save_recording_raw(const std::string& path, const Recording& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot write " + path);
    std::string header(detail::kRawMagic, 4);
    detail::put_u32(header, static_cast<std::uint32_t>(rec.n_channels()));
    detail::put_u32(header, static_cast<std::uint32_t>(rec.sampling_rate));
    detail::put_u32(header, 0);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(rec.samples.data().data()),
              static_cast<std::streamsize>(rec.samples.data().size() * sizeof(double)));
    if (!out) throw IOFailure("write failed: " + path);
}

inline Recording load_recording_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IOFailure("cannot open " + path);
    std::streamsize size = in.tellg();
    in.seekg(0);
    if (size < 16) throw ParseError(path + ": shorter than the 16-byte header", 0);
    unsigned char header[16];
    in.read(reinterpret_cast<char*>(header), 16);
    if (std::memcmp(header, detail::kRawMagic, 4) != 0)
        throw ParseError(path + ": bad magic", 0);
    std::uint32_t n_ch = detail::get_u32(header + 4);
    std::uint32_t rate = detail::get_u32(header + 8);
    if (n_ch == 0) throw ParseError(path + ": zero channels", 0);
    std::uint64_t payload = static_cast<std::uint64_t>(size) - 16;
    std::uint64_t row_bytes = static_cast<std::uint64_t>(n_ch) * 8;
    if (payload % row_bytes != 0)
        throw ParseError(path + ": payload size not a multiple of one sample row", 0);
    Recording rec;
    rec.sampling_rate = rate;
    rec.channel_names.reserve(n_ch);
    for (std::uint32_t c = 0; c < n_ch; ++c) rec.channel_names.push_back("ch" + std::to_string(c));
    rec.samples = Matrix(payload / row_bytes, n_ch);
    in.read(reinterpret_cast<char*>(rec.samples.data().data()),
            static_cast<std::streamsize>(payload));
    if (!in) throw IOFailure("truncated read: " + path);
    return rec;
}

inline std::vector<Event> load_events_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"onset_sample", "duration_samples", "label"})
        throw ParseError(path + ": expected header onset_sample,duration_samples,label", 1);
    std::vector<Event> events;
    events.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != 3)
            throw ParseError("expected 3 fields", r + 2);
        Event e;
        e.onset_sample = parse_int(table.rows[r][0], r + 2);
        e.duration_samples = parse_int(table.rows[r][1], r + 2);
        e.label = table.rows[r][2];
        events.push_back(std::move(e));
    }
    return events;
}

inline void save_events_csv(const std::string& path, const std::vector<Event>& events) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(events.size());
    for (const Event& e : events)
        rows.push_back({std::to_string(e.onset_sample), std::to_string(e.duration_samples), e.label});
    write_csv(path, {"onset_sample", "duration_samples", "label"}, rows);
}

// Common average reference: subtracts the cross-channel mean from every
// sample. Afterwards each row sums to zero (up to roundoff).
inline void car_filter(Recording& rec) {
    if (rec.n_channels() < 2)
        throw TooFewChannels("common average reference needs at least 2 channels");
    for (std::size_t r = 0; r < rec.n_samples(); ++r) {
        auto row = rec.samples.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(row.size());
        for (double& v : row) v -= mean;
    }
}

namespace detail {

inline void filtfilt_channels(Recording& rec, const SosCascade& sos) {
    std::vector<double> chan(rec.n_samples());
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
        for (std::size_t r = 0; r < rec.n_samples(); ++r) chan[r] = rec.samples(r, c);
        std::vector<double> filtered = filtfilt(sos, chan);
        for (std::size_t r = 0; r < rec.n_samples(); ++r) rec.samples(r, c) = filtered[r];
    }
}

}  // namespace detail

// Zero-phase Butterworth band-stop at every harmonic of base_hz.
inline void notch_cascade(Recording& rec, double base_hz = 50.0, int harmonics = 6,
                          int order = 5, double half_width_hz = 1.0) {
    for (int k = 1; k <= harmonics; ++k) {
        double center = base_hz * k;
        SosCascade sos = butter_bandstop(order, center - half_width_hz, center + half_width_hz,
                                         rec.sampling_rate);
        detail::filtfilt_channels(rec, sos);
    }
}

// Zero-phase Butterworth band-pass over the whole recording.
inline void band_filter(Recording& rec, double low_hz, double high_hz, int order = 4) {
    SosCascade sos = butter_bandpass(order, low_hz, high_hz, rec.sampling_rate);
    detail::filtfilt_channels(rec, sos);
}

// Cuts one fixed-length window per event, starting at the event onset.
// Shorter events are zero-padded at the end; valid_length records how many
// rows carry real data.
inline std::vector<Epoch> segment_epochs(const Recording& rec, const std::vector<Event>& events,
                                         double window_seconds = 2.0) {
    auto window_len = static_cast<std::size_t>(std::llround(window_seconds * rec.sampling_rate));
    if (window_len == 0) throw WindowTooShort("epoch window is empty");
    std::vector<Epoch> epochs;
    epochs.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.onset_sample < 0 || static_cast<std::size_t>(e.onset_sample) >= rec.n_samples())
            throw EventOutOfRange("event " + std::to_string(i) + " onset " +
                                  std::to_string(e.onset_sample) + " outside recording of " +
                                  std::to_string(rec.n_samples()) + " samples");
        if (e.duration_samples <= 0)
            throw EventOutOfRange("event " + std::to_string(i) + " has non-positive duration");
        auto onset = static_cast<std::size_t>(e.onset_sample);
        std::size_t avail = rec.n_samples() - onset;
        std::size_t valid = std::min({window_len, static_cast<std::size_t>(e.duration_samples), avail});
        Epoch ep;
        ep.label = e.label;
        ep.valid_length = valid;
        ep.data = Matrix(window_len, rec.n_channels());
        for (std::size_t r = 0; r < valid; ++r)
            for (std::size_t c = 0; c < rec.n_channels(); ++c)
                ep.data(r, c) = rec.samples(onset + r, c);
        epochs.push_back(std::move(ep));
    }
    return epochs;
}

}  // namespace tfr
