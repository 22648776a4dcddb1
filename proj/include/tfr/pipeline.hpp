#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tfr/bandpower.hpp"
#include "tfr/csv.hpp"
#include "tfr/cv.hpp"
#include "tfr/dataset.hpp"
#include "tfr/diagram_features.hpp"
#include "tfr/errors.hpp"
#include "tfr/gnb.hpp"
#include "tfr/gradient_boosting.hpp"
#include "tfr/hyperopt.hpp"
#include "tfr/importance.hpp"
#include "tfr/parallel.hpp"
#include "tfr/persistence.hpp"
#include "tfr/random.hpp"
#include "tfr/signal.hpp"
#include "tfr/svg.hpp"
#include "tfr/synthetic.hpp"
#include "tfr/takens.hpp"

namespace tfr {

struct HyperoptBudget {
    int n_calls = 10;
    int n_initial = 5;
};

struct InputFiles {
    std::string recording;
    std::string format = "raw_f64";  // raw_f64 | csv
    std::string events;
    double sampling_rate = 0.0;  // required for csv input
};

// Everything a run needs, read from one JSON document. Seeds are plain
// numbers in the file; nothing falls back to wall-clock state.
struct PipelineConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    unsigned threads = 1;
    bool use_synthetic = true;
    SyntheticSpec synthetic = default_synthetic_spec();
    InputFiles input;
    double window_s = 2.0;
    std::vector<std::string> variants = {"v1", "v2", "v3", "v4"};
    TakensParams embedding;
    AmplitudeParams amplitude;
    std::vector<std::string> models = {"rf", "gb"};
    HyperoptBudget budget;
    int cv_folds = 5;
    double gb_learning_rate = 0.1;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, const std::string& where,
                                const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config field '" + where + "': unknown key '" + it.key() + "'");
}

template <typename T>
T get_field(const json& j, const std::string& where, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + where + "." + key + "': wrong type");
    }
}

// Stable sub-seed: one draw of the shared counter-mixed generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
    return make_rng(seed, counter)();
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    if (cfg.use_synthetic) {
        nlohmann::json s;
        s["channels"] = cfg.synthetic.channels;
        s["sampling_rate"] = cfg.synthetic.sampling_rate;
        s["noise_level"] = cfg.synthetic.noise_level;
        s["min_duration_s"] = cfg.synthetic.min_duration_s;
        s["max_duration_s"] = cfg.synthetic.max_duration_s;
        s["gap_s"] = cfg.synthetic.gap_s;
        s["classes"] = nlohmann::json::array();
        for (const ClassSpec& c : cfg.synthetic.classes)
            s["classes"].push_back({{"label", c.label},
                                    {"trials", c.trials},
                                    {"burst_hz", c.burst_hz},
                                    {"burst_amplitude", c.burst_amplitude},
                                    {"loop_hz", c.loop_hz},
                                    {"loop_radius", c.loop_radius},
                                    {"radius_jitter", c.radius_jitter}});
        j["synthetic"] = std::move(s);
    } else {
        j["input"] = {{"recording", cfg.input.recording},
                      {"format", cfg.input.format},
                      {"events", cfg.input.events},
                      {"sampling_rate", cfg.input.sampling_rate}};
    }
    j["window_s"] = cfg.window_s;
    j["variants"] = cfg.variants;
    j["embedding"] = {{"dim", cfg.embedding.dim}, {"tau", cfg.embedding.tau},
                      {"stride", cfg.embedding.stride}};
    j["amplitude"] = {{"p", cfg.amplitude.p},
                      {"grid_size", cfg.amplitude.grid_size},
                      {"layers", cfg.amplitude.layers},
                      {"sigma", cfg.amplitude.sigma},
                      {"weight_power", cfg.amplitude.weight_power}};
    j["models"] = cfg.models;
    j["hyperopt"] = {{"n_calls", cfg.budget.n_calls}, {"n_initial", cfg.budget.n_initial}};
    j["cv_folds"] = cfg.cv_folds;
    j["gb_learning_rate"] = cfg.gb_learning_rate;
    return j;
}

inline PipelineConfig parse_pipeline_config(const std::string& text) {
    using detail::get_field;
    using detail::reject_unknown_keys;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(j, "<root>",
                        {"out_dir", "seed", "threads", "synthetic", "input", "window_s", "variants",
                         "embedding", "amplitude", "models", "hyperopt", "cv_folds",
                         "gb_learning_rate"});
    PipelineConfig cfg;
    cfg.out_dir = get_field<std::string>(j, "<root>", "out_dir", cfg.out_dir);
    cfg.seed = get_field<std::uint64_t>(j, "<root>", "seed", cfg.seed);
    cfg.threads = get_field<unsigned>(j, "<root>", "threads", cfg.threads);
    cfg.window_s = get_field<double>(j, "<root>", "window_s", cfg.window_s);
    cfg.variants = get_field<std::vector<std::string>>(j, "<root>", "variants", cfg.variants);
    cfg.models = get_field<std::vector<std::string>>(j, "<root>", "models", cfg.models);
    cfg.cv_folds = get_field<int>(j, "<root>", "cv_folds", cfg.cv_folds);
    cfg.gb_learning_rate = get_field<double>(j, "<root>", "gb_learning_rate", cfg.gb_learning_rate);

    if (j.contains("synthetic") && j.contains("input"))
        throw ConfigError("config field '<root>': give either 'synthetic' or 'input', not both");
    if (j.contains("input")) {
        cfg.use_synthetic = false;
        const auto& ji = j.at("input");
        reject_unknown_keys(ji, "input", {"recording", "format", "events", "sampling_rate"});
        cfg.input.recording = get_field<std::string>(ji, "input", "recording", "");
        cfg.input.format = get_field<std::string>(ji, "input", "format", cfg.input.format);
        cfg.input.events = get_field<std::string>(ji, "input", "events", "");
        cfg.input.sampling_rate = get_field<double>(ji, "input", "sampling_rate", 0.0);
    } else if (j.contains("synthetic")) {
        const auto& js = j.at("synthetic");
        reject_unknown_keys(js, "synthetic",
                            {"channels", "sampling_rate", "noise_level", "min_duration_s",
                             "max_duration_s", "gap_s", "classes"});
        SyntheticSpec& s = cfg.synthetic;
        s.channels = get_field<std::size_t>(js, "synthetic", "channels", s.channels);
        s.sampling_rate = get_field<double>(js, "synthetic", "sampling_rate", s.sampling_rate);
        s.noise_level = get_field<double>(js, "synthetic", "noise_level", s.noise_level);
        s.min_duration_s = get_field<double>(js, "synthetic", "min_duration_s", s.min_duration_s);
        s.max_duration_s = get_field<double>(js, "synthetic", "max_duration_s", s.max_duration_s);
        s.gap_s = get_field<double>(js, "synthetic", "gap_s", s.gap_s);
        if (js.contains("classes")) {
            if (!js.at("classes").is_array())
                throw ConfigError("config field 'synthetic.classes': must be an array");
            s.classes.clear();
            for (const auto& jc : js.at("classes")) {
                reject_unknown_keys(jc, "synthetic.classes",
                                    {"label", "trials", "burst_hz", "burst_amplitude", "loop_hz",
                                     "loop_radius", "radius_jitter"});
                ClassSpec c;
                c.label = get_field<std::string>(jc, "synthetic.classes", "label", "");
                c.trials = get_field<std::size_t>(jc, "synthetic.classes", "trials", 0);
                c.burst_hz = get_field<double>(jc, "synthetic.classes", "burst_hz", 0.0);
                c.burst_amplitude =
                    get_field<double>(jc, "synthetic.classes", "burst_amplitude", 0.0);
                c.loop_hz = get_field<double>(jc, "synthetic.classes", "loop_hz", 0.0);
                c.loop_radius = get_field<double>(jc, "synthetic.classes", "loop_radius", 0.0);
                c.radius_jitter = get_field<double>(jc, "synthetic.classes", "radius_jitter", 0.0);
                s.classes.push_back(std::move(c));
            }
        }
    }
    if (j.contains("embedding")) {
        const auto& je = j.at("embedding");
        reject_unknown_keys(je, "embedding", {"dim", "tau", "stride"});
        cfg.embedding.dim = get_field<std::size_t>(je, "embedding", "dim", cfg.embedding.dim);
        cfg.embedding.tau = get_field<std::size_t>(je, "embedding", "tau", cfg.embedding.tau);
        cfg.embedding.stride =
            get_field<std::size_t>(je, "embedding", "stride", cfg.embedding.stride);
    }
    if (j.contains("amplitude")) {
        const auto& ja = j.at("amplitude");
        reject_unknown_keys(ja, "amplitude", {"p", "grid_size", "layers", "sigma", "weight_power"});
        cfg.amplitude.p = get_field<double>(ja, "amplitude", "p", cfg.amplitude.p);
        cfg.amplitude.grid_size =
            get_field<std::size_t>(ja, "amplitude", "grid_size", cfg.amplitude.grid_size);
        cfg.amplitude.layers =
            get_field<std::size_t>(ja, "amplitude", "layers", cfg.amplitude.layers);
        cfg.amplitude.sigma = get_field<double>(ja, "amplitude", "sigma", cfg.amplitude.sigma);
        cfg.amplitude.weight_power =
            get_field<double>(ja, "amplitude", "weight_power", cfg.amplitude.weight_power);
    }
    if (j.contains("hyperopt")) {
        const auto& jh = j.at("hyperopt");
        reject_unknown_keys(jh, "hyperopt", {"n_calls", "n_initial"});
        cfg.budget.n_calls = get_field<int>(jh, "hyperopt", "n_calls", cfg.budget.n_calls);
        cfg.budget.n_initial = get_field<int>(jh, "hyperopt", "n_initial", cfg.budget.n_initial);
    }
    for (std::string& v : cfg.variants)
        std::transform(v.begin(), v.end(), v.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return cfg;
}

inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("config field 'out_dir': must not be empty");
    if (cfg.threads < 1) throw ConfigError("config field 'threads': must be >= 1");
    if (!(cfg.window_s > 0.0)) throw ConfigError("config field 'window_s': must be positive");
    if (cfg.cv_folds < 2) throw ConfigError("config field 'cv_folds': must be >= 2");
    if (cfg.variants.empty()) throw ConfigError("config field 'variants': must not be empty");
    std::set<std::string> known_variants;
    for (const PreprocVariant& pv : standard_variants()) known_variants.insert(pv.name);
    std::set<std::string> seen;
    for (const std::string& v : cfg.variants) {
        if (!known_variants.count(v))
            throw ConfigError("config field 'variants': unknown variant '" + v + "'");
        if (!seen.insert(v).second)
            throw ConfigError("config field 'variants': duplicate variant '" + v + "'");
    }
    if (cfg.models.empty()) throw ConfigError("config field 'models': must not be empty");
    seen.clear();
    for (const std::string& m : cfg.models) {
        if (m != "rf" && m != "gb" && m != "gnb")
            throw ConfigError("config field 'models': unknown model '" + m + "'");
        if (!seen.insert(m).second)
            throw ConfigError("config field 'models': duplicate model '" + m + "'");
    }
    if (cfg.budget.n_initial < 2)
        throw ConfigError("config field 'hyperopt.n_initial': must be >= 2");
    if (cfg.budget.n_calls < cfg.budget.n_initial)
        throw ConfigError("config field 'hyperopt.n_calls': must be >= n_initial");
    if (cfg.embedding.dim < 1) throw ConfigError("config field 'embedding.dim': must be >= 1");
    if (cfg.embedding.tau < 1) throw ConfigError("config field 'embedding.tau': must be >= 1");
    if (cfg.embedding.stride < 1)
        throw ConfigError("config field 'embedding.stride': must be >= 1");
    if (!(cfg.amplitude.p >= 1.0)) throw ConfigError("config field 'amplitude.p': must be >= 1");
    if (cfg.amplitude.grid_size < 2)
        throw ConfigError("config field 'amplitude.grid_size': must be >= 2");
    if (cfg.amplitude.layers < 1)
        throw ConfigError("config field 'amplitude.layers': must be >= 1");
    if (cfg.amplitude.weight_power < 0.0)
        throw ConfigError("config field 'amplitude.weight_power': must be >= 0");
    if (!(cfg.gb_learning_rate > 0.0))
        throw ConfigError("config field 'gb_learning_rate': must be positive");
    if (cfg.use_synthetic) {
        try {
            detail::validate_synthetic_spec(cfg.synthetic);
        } catch (const SpecInvalid& e) {
            throw ConfigError(std::string("config field 'synthetic': ") + e.what());
        }
        for (const ClassSpec& c : cfg.synthetic.classes)
            if (c.trials < static_cast<std::size_t>(cfg.cv_folds))
                throw ConfigError("config field 'synthetic.classes': class '" + c.label + "' has " +
                                  std::to_string(c.trials) + " trials, fewer than cv_folds");
    } else {
        if (cfg.input.recording.empty())
            throw ConfigError("config field 'input.recording': must not be empty");
        if (cfg.input.events.empty())
            throw ConfigError("config field 'input.events': must not be empty");
        if (cfg.input.format != "csv" && cfg.input.format != "raw_f64")
            throw ConfigError("config field 'input.format': expected csv or raw_f64");
        if (cfg.input.format == "csv" && !(cfg.input.sampling_rate > 0.0))
            throw ConfigError("config field 'input.sampling_rate': required for csv input");
        if (!std::filesystem::exists(cfg.input.recording))
            throw ConfigError("config field 'input.recording': no such file '" +
                              cfg.input.recording + "'");
        if (!std::filesystem::exists(cfg.input.events))
            throw ConfigError("config field 'input.events': no such file '" + cfg.input.events +
                              "'");
    }
}

// ---- artifact paths -----------------------------------------------------

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& rest) {
    return (std::filesystem::path(dir) / rest).string();
}

inline std::string set_name(int want_tda) {
    return want_tda == 0 ? "pb" : want_tda == 1 ? "tda" : "pb_tda";
}

inline std::string recording_path(const PipelineConfig& c) {
    return join_path(c.out_dir, "dataset/recording.raw");
}
inline std::string events_path(const PipelineConfig& c) {
    return join_path(c.out_dir, "dataset/events.csv");
}
inline std::string pb_path(const PipelineConfig& c) {
    return join_path(c.out_dir, "features/pb.csv");
}
inline std::string matrix_path(const PipelineConfig& c, const std::string& v) {
    return join_path(c.out_dir, "features/matrix_" + v + ".csv");
}
inline std::string diagrams_path(const PipelineConfig& c, const std::string& v) {
    return join_path(c.out_dir, "features/diagrams_" + v + ".csv");
}
inline std::string tune_base(const PipelineConfig& c, const std::string& model,
                             const std::string& v, int want_tda) {
    return join_path(c.out_dir, "tune/" + model + "_" + v + "_" + set_name(want_tda));
}

inline void ensure_dir(const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
}

// Global feature naming: ids 0..17 are diagram features, the rest are
// band-power features in channel-major (channel, band) order.
inline std::string feature_name(std::size_t id) {
    if (id < kDiagramFeatureCount) return diagram_feature_name(id);
    std::size_t rest = id - kDiagramFeatureCount;
    return "pb_ch" + std::to_string(rest / 3) + "_b" + std::to_string(rest % 3);
}

}  // namespace detail

// ---- feature matrix round-trip ------------------------------------------

struct LoadedMatrix {
    FeatureMatrix fm;
    std::vector<std::string> labels;  // per row, original strings
};

inline void write_feature_matrix(const std::string& path, const Matrix& x,
                                 const std::vector<std::string>& labels,
                                 const std::vector<std::size_t>& feature_ids) {
    detail::ensure_dir(path);
    std::vector<std::string> header = {"epoch_id", "label"};
    for (std::size_t id : feature_ids) header.push_back("f" + std::to_string(id));
    std::vector<std::vector<std::string>> rows(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        rows[r].reserve(2 + x.cols());
        rows[r].push_back(std::to_string(r));
        rows[r].push_back(labels[r]);
        for (std::size_t c = 0; c < x.cols(); ++c) rows[r].push_back(format_double(x(r, c)));
    }
    write_csv(path, header, rows);
}

inline LoadedMatrix read_feature_matrix(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header.size() < 3 || t.header[0] != "epoch_id" || t.header[1] != "label")
        throw ParseError(path + ": expected header epoch_id,label,f...", 1);
    LoadedMatrix lm;
    std::size_t nf = t.header.size() - 2;
    for (std::size_t c = 0; c < nf; ++c) {
        const std::string& h = t.header[c + 2];
        if (h.size() < 2 || h[0] != 'f')
            throw ParseError(path + ": feature column '" + h + "' should be f<id>", 1);
        std::size_t id = static_cast<std::size_t>(parse_int(h.substr(1), 1));
        lm.fm.feature_ids.push_back(id);
        lm.fm.is_tda.push_back(id < kDiagramFeatureCount ? 1 : 0);
    }
    lm.fm.x = Matrix(t.rows.size(), nf);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.header.size())
            throw ParseError(path + ": row width mismatch", r + 2);
        lm.labels.push_back(t.rows[r][1]);
        for (std::size_t c = 0; c < nf; ++c)
            lm.fm.x(r, c) = parse_double(t.rows[r][c + 2], r + 2);
    }
    auto enc = encode_labels(lm.labels);
    lm.fm.y = std::move(enc.first);
    lm.fm.class_names = std::move(enc.second);
    return lm;
}

// ---- model registry -----------------------------------------------------

inline SearchSpace model_space(const std::string& model) {
    if (model == "rf")
        return {{ParamSpec::make_integer("max_depth", 2, 8),
                ParamSpec::make_integer("n_estimators", 50, 150),
                ParamSpec::make_categorical("criterion", {"gini", "entropy"}),
                ParamSpec::make_real("max_features", 0.05, 1.0)}};
    if (model == "gb")
        return {{ParamSpec::make_integer("max_depth", 2, 4),
                ParamSpec::make_integer("n_estimators", 30, 80),
                ParamSpec::make_categorical("criterion", {"mse", "friedman_mse"}),
                ParamSpec::make_real("subsample", 0.4, 1.0)}};
    if (model == "gnb") return {{ParamSpec::make_real("log10_var_smoothing", -12.0, -3.0)}};
    throw ConfigError("config field 'models': unknown model '" + model + "'");
}

inline nlohmann::json assignment_to_json(const SearchSpace& space, const Assignment& a) {
    nlohmann::json out;
    for (std::size_t i = 0; i < space.params.size(); ++i) {
        const ParamSpec& p = space.params[i];
        if (p.kind == ParamSpec::Kind::real) out[p.name] = a[i];
        else if (p.kind == ParamSpec::Kind::integer) out[p.name] = static_cast<long long>(a[i]);
        else out[p.name] = p.options[static_cast<std::size_t>(a[i])];
    }
    return out;
}

// Builds the train/predict closure used by both tuning and reporting.
// Tree randomness is keyed by `fit_seed` and the global feature ids, so a
// column subset trains identically wherever the subset came from.
inline FitPredictFn fit_predict_for(const std::string& model, const nlohmann::json& params,
                                    int n_classes, std::uint64_t fit_seed,
                                    const std::vector<std::size_t>& feature_ids, unsigned threads,
                                    double gb_learning_rate) {
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!params.contains(key))
            throw ConfigError("model '" + model + "': missing parameter '" + key + "'");
        return params.at(key);
    };
    if (model == "rf") {
        RfParams p;
        p.max_depth = need("max_depth").get<std::size_t>();
        p.n_estimators = need("n_estimators").get<std::size_t>();
        p.max_features = need("max_features").get<double>();
        std::string crit = need("criterion").get<std::string>();
        if (crit != "gini" && crit != "entropy")
            throw ConfigError("model 'rf': criterion must be gini or entropy");
        p.criterion = crit == "gini" ? SplitCriterion::gini : SplitCriterion::entropy;
        return [p, n_classes, fit_seed, feature_ids, threads](
                   const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
            RandomForest m;
            m.fit(tx, ty, n_classes, p, fit_seed, feature_ids, threads);
            return m.predict(qx, threads);
        };
    }
    if (model == "gb") {
        GbParams p;
        p.max_depth = need("max_depth").get<std::size_t>();
        p.n_estimators = need("n_estimators").get<std::size_t>();
        p.subsample = need("subsample").get<double>();
        p.learning_rate = gb_learning_rate;
        std::string crit = need("criterion").get<std::string>();
        if (crit != "mse" && crit != "friedman_mse")
            throw ConfigError("model 'gb': criterion must be mse or friedman_mse");
        p.criterion = crit == "mse" ? SplitCriterion::mse : SplitCriterion::friedman_mse;
        return [p, n_classes, fit_seed, feature_ids](const Matrix& tx, const std::vector<int>& ty,
                                                     const Matrix& qx) {
            GradientBoosting m;
            m.fit(tx, ty, n_classes, p, fit_seed, feature_ids);
            return m.predict(qx);
        };
    }
    if (model == "gnb") {
        GnbParams p;
        p.var_smoothing = std::pow(10.0, need("log10_var_smoothing").get<double>());
        return [p, n_classes](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
            GaussianNb m;
            m.fit(tx, ty, n_classes, p);
            return m.predict(qx);
        };
    }
    throw ConfigError("config field 'models': unknown model '" + model + "'");
}

// ---- stages -------------------------------------------------------------

inline void stage_generate(const PipelineConfig& cfg) {
    if (!cfg.use_synthetic)
        throw ConfigError("generate needs a 'synthetic' block; this config reads input files");
    SyntheticSession session = generate_synthetic(cfg.synthetic, cfg.seed);
    detail::ensure_dir(detail::recording_path(cfg));
    save_recording_raw(detail::recording_path(cfg), session.recording);
    save_events_csv(detail::events_path(cfg), session.events);
    std::printf("[generate] %zu samples x %zu channels, %zu events\n",
                session.recording.n_samples(), session.recording.n_channels(),
                session.events.size());
}

namespace detail {

inline Recording load_dataset(const PipelineConfig& cfg, std::vector<Event>& events) {
    std::string rec_path, ev_path;
    if (cfg.use_synthetic) {
        rec_path = recording_path(cfg);
        ev_path = events_path(cfg);
        if (!std::filesystem::exists(rec_path))
            throw IOFailure("no dataset at " + rec_path + "; run the generate stage first");
    } else {
        rec_path = cfg.input.recording;
        ev_path = cfg.input.events;
    }
    Recording rec = (!cfg.use_synthetic && cfg.input.format == "csv")
                        ? load_recording_csv(rec_path, cfg.input.sampling_rate)
                        : load_recording_raw(rec_path);
    events = load_events_csv(ev_path);
    return rec;
}

// The mains notch runs once, before the per-variant band filters; both
// chains are linear so the order only affects edge roundoff. Harmonics
// that would cross Nyquist are dropped.
inline void apply_notch(Recording& rec) {
    double nyquist = rec.sampling_rate / 2.0;
    int harmonics = 0;
    while (harmonics < 6 && 50.0 * (harmonics + 1) + 1.0 < nyquist) ++harmonics;
    if (harmonics > 0) notch_cascade(rec, 50.0, harmonics, 5, 1.0);
}

}  // namespace detail

inline void stage_features(const PipelineConfig& cfg) {
    std::vector<Event> events;
    Recording base = detail::load_dataset(cfg, events);
    detail::apply_notch(base);
    std::size_t n_pb = base.n_channels() * standard_bands().size();

    // Band-power block: one preprocessing (CAR after the notch), shared by
    // every variant below.
    std::vector<std::string> labels;
    Matrix pb_x;
    {
        Recording pb_rec = base;
        car_filter(pb_rec);
        std::vector<Epoch> epochs = segment_epochs(pb_rec, events, cfg.window_s);
        pb_x = Matrix(epochs.size(), n_pb);
        parallel_for(epochs.size(), cfg.threads, [&](std::size_t i) {
            std::vector<double> row = bandpower_features(epochs[i], pb_rec.sampling_rate);
            for (std::size_t c = 0; c < n_pb; ++c) pb_x(i, c) = row[c];
        });
        for (const Epoch& e : epochs) labels.push_back(e.label);
        std::vector<std::size_t> pb_ids(n_pb);
        for (std::size_t c = 0; c < n_pb; ++c) pb_ids[c] = kDiagramFeatureCount + c;
        write_feature_matrix(detail::pb_path(cfg), pb_x, labels, pb_ids);
    }

    std::vector<PreprocVariant> all = standard_variants();
    for (const std::string& vname : cfg.variants) {
        const PreprocVariant* pv = nullptr;
        for (const PreprocVariant& v : all)
            if (v.name == vname) pv = &v;
        if (pv == nullptr) throw ConfigError("config field 'variants': unknown variant '" + vname + "'");
        Recording rv = base;
        if (pv->use_car) car_filter(rv);
        band_filter(rv, pv->low_hz, pv->high_hz);
        std::vector<Epoch> epochs = segment_epochs(rv, events, cfg.window_s);
        rv = Recording{};
        Matrix tda_x(epochs.size(), kDiagramFeatureCount);
        std::vector<PersistenceDiagram> diagrams(epochs.size());
        parallel_for(epochs.size(), cfg.threads, [&](std::size_t i) {
            Matrix points = takens_embedding(epochs[i], cfg.embedding);
            diagrams[i] = vr_persistence(points, 1, true);
            std::vector<double> row = diagram_feature_vector(diagrams[i], cfg.amplitude);
            for (std::size_t c = 0; c < kDiagramFeatureCount; ++c) tda_x(i, c) = row[c];
        });

        std::vector<std::vector<std::string>> dg_rows;
        for (std::size_t i = 0; i < diagrams.size(); ++i) {
            for (const PersistencePair& pr : diagrams[i].h0)
                dg_rows.push_back({std::to_string(i), "0", format_double(pr.birth),
                                   format_double(pr.death), format_double(diagrams[i].cap)});
            for (const PersistencePair& pr : diagrams[i].h1)
                dg_rows.push_back({std::to_string(i), "1", format_double(pr.birth),
                                   format_double(pr.death), format_double(diagrams[i].cap)});
        }
        detail::ensure_dir(detail::diagrams_path(cfg, vname));
        write_csv(detail::diagrams_path(cfg, vname), {"epoch_id", "dim", "birth", "death", "cap"},
                  dg_rows);

        Matrix joined(epochs.size(), kDiagramFeatureCount + n_pb);
        for (std::size_t r = 0; r < joined.rows(); ++r) {
            for (std::size_t c = 0; c < kDiagramFeatureCount; ++c) joined(r, c) = tda_x(r, c);
            for (std::size_t c = 0; c < n_pb; ++c) joined(r, kDiagramFeatureCount + c) = pb_x(r, c);
        }
        std::vector<std::size_t> ids(joined.cols());
        for (std::size_t c = 0; c < ids.size(); ++c) ids[c] = c;
        write_feature_matrix(detail::matrix_path(cfg, vname), joined, labels, ids);
        std::printf("[features] %s: %zu epochs, %zu features\n", vname.c_str(), joined.rows(),
                    joined.cols());
    }
}

namespace detail {

inline std::size_t opt_index(const PipelineConfig& cfg, std::size_t vi, std::size_t mi, int si) {
    return (vi * cfg.models.size() + mi) * 3 + static_cast<std::size_t>(si);
}

inline const std::vector<int>& feature_sets() {
    static const std::vector<int> sets = {0, 1, -1};  // pb, tda, pb_tda
    return sets;
}

}  // namespace detail

inline void stage_tune(const PipelineConfig& cfg) {
    std::uint64_t fold_seed = detail::derive_seed(cfg.seed, 101);
    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
        const std::string& vname = cfg.variants[vi];
        std::string mpath = detail::matrix_path(cfg, vname);
        if (!std::filesystem::exists(mpath))
            throw IOFailure("no feature matrix at " + mpath + "; run the features stage first");
        LoadedMatrix lm = read_feature_matrix(mpath);
        int n_classes = static_cast<int>(lm.fm.class_names.size());
        for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
            const std::string& model = cfg.models[mi];
            SearchSpace space = model_space(model);
            for (int si = 0; si < 3; ++si) {
                int want = detail::feature_sets()[static_cast<std::size_t>(si)];
                FeatureMatrix fm = select_features(lm.fm, want);
                std::size_t idx = detail::opt_index(cfg, vi, mi, si);
                std::uint64_t fit_seed = detail::derive_seed(cfg.seed, 500 + idx);
                std::uint64_t opt_seed = detail::derive_seed(cfg.seed, 900 + idx);
                auto objective = [&](const Assignment& a) {
                    nlohmann::json params = assignment_to_json(space, a);
                    FitPredictFn fp = fit_predict_for(model, params, n_classes, fit_seed,
                                                      fm.feature_ids, cfg.threads,
                                                      cfg.gb_learning_rate);
                    try {
                        return cross_validate(fp, fm.x, fm.y, cfg.cv_folds, fold_seed).mean;
                    } catch (const NumericError& e) {
                        throw ObjectiveFailure(e.what());
                    }
                };
                OptimizationTrace trace =
                    optimize(objective, space, cfg.budget.n_calls, cfg.budget.n_initial, opt_seed);

                std::string base = detail::tune_base(cfg, model, vname, want);
                detail::ensure_dir(base);
                std::vector<std::string> header = {"trial"};
                for (const ParamSpec& p : space.params) header.push_back(p.name);
                header.push_back("objective");
                header.push_back("best_so_far");
                std::vector<std::vector<std::string>> rows;
                for (std::size_t t = 0; t < trace.trials.size(); ++t) {
                    const Trial& tr = trace.trials[t];
                    std::vector<std::string> row = {std::to_string(t)};
                    for (std::size_t p = 0; p < space.params.size(); ++p) {
                        if (space.params[p].kind == ParamSpec::Kind::categorical)
                            row.push_back(
                                space.params[p].options[static_cast<std::size_t>(tr.assignment[p])]);
                        else if (space.params[p].kind == ParamSpec::Kind::integer)
                            row.push_back(
                                std::to_string(static_cast<long long>(tr.assignment[p])));
                        else
                            row.push_back(format_double(tr.assignment[p]));
                    }
                    row.push_back(tr.ok ? format_double(tr.objective) : "nan");
                    row.push_back(format_double(trace.best_so_far[t]));
                    rows.push_back(std::move(row));
                }
                write_csv(base + "_trace.csv", header, rows);

                std::size_t best_t = trace.trials.size();
                for (std::size_t t = 0; t < trace.trials.size(); ++t)
                    if (trace.trials[t].ok &&
                        (best_t == trace.trials.size() ||
                         trace.trials[t].objective > trace.trials[best_t].objective))
                        best_t = t;
                if (best_t == trace.trials.size())
                    throw NumericError("tuning " + model + "/" + vname + "/" +
                                       detail::set_name(want) + ": every trial failed");
                nlohmann::json best;
                best["model"] = model;
                best["variant"] = vname;
                best["feature_set"] = detail::set_name(want);
                best["objective"] = trace.trials[best_t].objective;
                best["params"] = assignment_to_json(space, trace.trials[best_t].assignment);
                write_text(base + "_best.json", best.dump(2) + "\n");

                LineSeries raw{"objective", {}, {}}, run{"best_so_far", {}, {}};
                for (std::size_t t = 0; t < trace.trials.size(); ++t) {
                    if (trace.trials[t].ok) {
                        raw.xs.push_back(static_cast<double>(t));
                        raw.ys.push_back(trace.trials[t].objective);
                        run.xs.push_back(static_cast<double>(t));
                        run.ys.push_back(trace.best_so_far[t]);
                    }
                }
                write_text(base + "_convergence.svg",
                           svg_line_chart({raw, run},
                                          model + " " + vname + " " + detail::set_name(want),
                                          "trial", "cv accuracy"));
                std::printf("[tune] %s %s %s: best %s\n", model.c_str(), vname.c_str(),
                            detail::set_name(want).c_str(),
                            format_double(trace.trials[best_t].objective).c_str());
            }
        }
    }
}

inline void stage_report(const PipelineConfig& cfg) {
    std::uint64_t fold_seed = detail::derive_seed(cfg.seed, 101);
    std::vector<LoadedMatrix> matrices;
    for (const std::string& vname : cfg.variants) {
        std::string mpath = detail::matrix_path(cfg, vname);
        if (!std::filesystem::exists(mpath))
            throw IOFailure("no feature matrix at " + mpath + "; run the features stage first");
        matrices.push_back(read_feature_matrix(mpath));
    }
    int n_classes = static_cast<int>(matrices[0].fm.class_names.size());
    const std::string pb_note = "pb block computed once (car+notch) and shared across variants";

    std::vector<std::vector<std::string>> cv_rows, summary_rows;
    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        const std::string& model = cfg.models[mi];
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
            const std::string& vname = cfg.variants[vi];
            for (int si = 0; si < 3; ++si) {
                int want = detail::feature_sets()[static_cast<std::size_t>(si)];
                std::string base = detail::tune_base(cfg, model, vname, want);
                if (!std::filesystem::exists(base + "_best.json"))
                    throw IOFailure("no tuned parameters at " + base +
                                    "_best.json; run the tune stage first");
                nlohmann::json best = nlohmann::json::parse(read_text(base + "_best.json"));
                FeatureMatrix fm = select_features(matrices[vi].fm, want);
                std::size_t idx = detail::opt_index(cfg, vi, mi, si);
                std::uint64_t fit_seed = detail::derive_seed(cfg.seed, 500 + idx);
                FitPredictFn fp =
                    fit_predict_for(model, best.at("params"), n_classes, fit_seed, fm.feature_ids,
                                    cfg.threads, cfg.gb_learning_rate);
                CvReport rep = cross_validate(fp, fm.x, fm.y, cfg.cv_folds, fold_seed);
                std::string sname = detail::set_name(want);
                for (std::size_t f = 0; f < rep.fold_accuracy.size(); ++f)
                    cv_rows.push_back({model, vname, sname, std::to_string(f),
                                       format_double(rep.fold_accuracy[f])});
                cv_rows.push_back({model, vname, sname, "mean", format_double(rep.mean)});
                cv_rows.push_back({model, vname, sname, "std", format_double(rep.stddev)});
                summary_rows.push_back({model, vname, sname, format_double(rep.mean),
                                        format_double(rep.stddev),
                                        want == 1 ? std::string() : pb_note});
            }
        }
    }
    std::string report_dir = detail::join_path(cfg.out_dir, "report");
    std::filesystem::create_directories(report_dir);
    write_csv(detail::join_path(report_dir, "cv_report.csv"),
              {"model", "variant", "feature_set", "fold", "accuracy"}, cv_rows);
    write_csv(detail::join_path(report_dir, "summary.csv"),
              {"model", "variant", "feature_set", "mean_accuracy", "std_accuracy", "note"},
              summary_rows);

    // Impurity importances on the full joined matrix, aggregated over
    // variants into one rank table per tree model.
    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        const std::string& model = cfg.models[mi];
        if (model != "rf" && model != "gb") continue;
        std::vector<ImportanceColumn> columns;
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
            const std::string& vname = cfg.variants[vi];
            std::string base = detail::tune_base(cfg, model, vname, -1);
            nlohmann::json best = nlohmann::json::parse(read_text(base + "_best.json"));
            const FeatureMatrix& fm = matrices[vi].fm;
            std::uint64_t fit_seed = detail::derive_seed(cfg.seed, 700 + vi * cfg.models.size() + mi);
            ImportanceColumn col;
            col.name = vname;
            col.feature_ids = fm.feature_ids;
            if (model == "rf") {
                RfParams p;
                p.max_depth = best.at("params").at("max_depth").get<std::size_t>();
                p.n_estimators = best.at("params").at("n_estimators").get<std::size_t>();
                p.max_features = best.at("params").at("max_features").get<double>();
                p.criterion = best.at("params").at("criterion").get<std::string>() == "gini"
                                  ? SplitCriterion::gini
                                  : SplitCriterion::entropy;
                RandomForest m;
                m.fit(fm.x, fm.y, n_classes, p, fit_seed, fm.feature_ids, cfg.threads);
                col.importance = impurity_importance(m);
            } else {
                GbParams p;
                p.max_depth = best.at("params").at("max_depth").get<std::size_t>();
                p.n_estimators = best.at("params").at("n_estimators").get<std::size_t>();
                p.subsample = best.at("params").at("subsample").get<double>();
                p.learning_rate = cfg.gb_learning_rate;
                p.criterion = best.at("params").at("criterion").get<std::string>() == "mse"
                                  ? SplitCriterion::mse
                                  : SplitCriterion::friedman_mse;
                GradientBoosting m;
                m.fit(fm.x, fm.y, n_classes, p, fit_seed, fm.feature_ids);
                col.importance = impurity_importance(m);
            }
            columns.push_back(std::move(col));
        }
        ImportanceTable table = rank_aggregate(columns);
        std::vector<std::string> header = {"feature_id", "name"};
        for (const std::string& v : table.variant_names) header.push_back("imp_" + v);
        for (const std::string& v : table.variant_names) header.push_back("rank_" + v);
        header.push_back("avg_imp");
        header.push_back("avg_rank");
        std::vector<std::vector<std::string>> rows;
        for (const ImportanceRow& r : table.rows) {
            std::vector<std::string> row = {std::to_string(r.feature_id),
                                            detail::feature_name(r.feature_id)};
            for (double v : r.importance) row.push_back(format_double(v));
            for (int v : r.rank) row.push_back(std::to_string(v));
            row.push_back(format_double(r.avg_importance));
            row.push_back(format_double(r.avg_rank));
            rows.push_back(std::move(row));
        }
        write_csv(detail::join_path(report_dir, "importance_" + model + ".csv"), header, rows);
    }

    // Mutual information per variant plus the cross-variant average.
    std::size_t nf = matrices[0].fm.x.cols();
    std::vector<std::vector<double>> mi_cols;
    for (const LoadedMatrix& lm : matrices)
        mi_cols.push_back(mutual_information(lm.fm.x, lm.fm.y));
    std::vector<double> mi_avg(nf, 0.0);
    for (const auto& col : mi_cols)
        for (std::size_t c = 0; c < nf; ++c) mi_avg[c] += col[c] / static_cast<double>(mi_cols.size());
    {
        std::vector<std::string> header = {"feature_id", "name"};
        for (const std::string& v : cfg.variants) header.push_back("mi_" + v);
        header.push_back("mi_avg");
        std::vector<std::vector<std::string>> rows;
        for (std::size_t c = 0; c < nf; ++c) {
            std::vector<std::string> row = {std::to_string(matrices[0].fm.feature_ids[c]),
                                            detail::feature_name(matrices[0].fm.feature_ids[c])};
            for (const auto& col : mi_cols) row.push_back(format_double(col[c]));
            row.push_back(format_double(mi_avg[c]));
            rows.push_back(std::move(row));
        }
        write_csv(detail::join_path(report_dir, "mi.csv"), header, rows);

        std::vector<std::size_t> order(nf);
        for (std::size_t c = 0; c < nf; ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (mi_avg[a] != mi_avg[b]) return mi_avg[a] > mi_avg[b];
            return a < b;
        });
        std::size_t top = std::min<std::size_t>(20, nf);
        std::vector<std::string> labels;
        std::vector<double> values;
        for (std::size_t i = 0; i < top; ++i) {
            labels.push_back(detail::feature_name(matrices[0].fm.feature_ids[order[i]]));
            values.push_back(mi_avg[order[i]]);
        }
        write_text(detail::join_path(report_dir, "mi_bars.svg"),
                   svg_bar_chart(labels, values, "mutual information with the class label (top " +
                                                     std::to_string(top) + ", variant average)",
                                 "nats"));
    }

    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
        Matrix corr = correlation_matrix(matrices[vi].fm.x);
        std::vector<std::string> header;
        header.reserve(corr.cols());
        for (std::size_t c = 0; c < corr.cols(); ++c)
            header.push_back("f" + std::to_string(matrices[vi].fm.feature_ids[c]));
        std::vector<std::vector<std::string>> rows(corr.rows());
        for (std::size_t r = 0; r < corr.rows(); ++r) {
            rows[r].reserve(corr.cols());
            for (std::size_t c = 0; c < corr.cols(); ++c)
                rows[r].push_back(format_double(corr(r, c)));
        }
        write_csv(detail::join_path(report_dir, "correlation_" + cfg.variants[vi] + ".csv"), header,
                  rows);
        write_text(detail::join_path(report_dir, "correlation_" + cfg.variants[vi] + ".svg"),
                   svg_heatmap(corr, "feature correlation, variant " + cfg.variants[vi]));
    }
    std::printf("[report] %zu summary rows\n", summary_rows.size());
}

// Runs the requested stages in pipeline order, tagging any error with the
// stage it came from.
inline void run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& stages) {
    validate_config(cfg);
    auto tagged = [](const std::string& stage, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ConfigError("stage " + stage + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("stage " + stage + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("stage " + stage + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("stage " + stage + ": " + e.what());
        }
    };
    for (const std::string& stage : stages) {
        if (stage == "generate") tagged(stage, [&] { stage_generate(cfg); });
        else if (stage == "features") tagged(stage, [&] { stage_features(cfg); });
        else if (stage == "tune") tagged(stage, [&] { stage_tune(cfg); });
        else if (stage == "report") tagged(stage, [&] { stage_report(cfg); });
        else throw ConfigError("unknown stage '" + stage + "'");
    }
}

inline std::vector<std::string> all_stages(const PipelineConfig& cfg) {
    std::vector<std::string> stages;
    if (cfg.use_synthetic) stages.push_back("generate");
    stages.push_back("features");
    stages.push_back("tune");
    stages.push_back("report");
    return stages;
}

}  // namespace tfr
