// Command-line front end. Subcommands mirror the pipeline stages; each can
// resume from the files the previous stage left in the output directory.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tfr/pipeline.hpp"

namespace {

struct Options {
    std::string config_path;
    bool has_seed = false;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir;
};

tfr::PipelineConfig load_config(const Options& opts) {
    tfr::PipelineConfig cfg = tfr::parse_pipeline_config(tfr::read_text(opts.config_path));
    if (opts.has_seed) cfg.seed = opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline configuration file (JSON)")
        ->required();
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&opts](const std::string&) { opts.has_seed = true; });
    cmd->add_option("--threads", opts.threads, "worker thread cap");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topological and band-power feature pipeline"};
    app.require_subcommand(1);
    Options opts;

    CLI::App* c_validate = app.add_subcommand("validate", "check a configuration and echo it");
    CLI::App* c_generate = app.add_subcommand("generate", "write the synthetic dataset");
    CLI::App* c_features = app.add_subcommand("features", "filter, segment, and extract features");
    CLI::App* c_tune = app.add_subcommand("tune", "optimize model hyperparameters");
    CLI::App* c_report = app.add_subcommand("report", "cross-validate and write reports");
    CLI::App* c_all = app.add_subcommand("all", "run every stage in order");
    for (CLI::App* cmd : {c_validate, c_generate, c_features, c_tune, c_report, c_all})
        add_common(cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        tfr::PipelineConfig cfg = load_config(opts);
        if (app.got_subcommand(c_validate)) {
            tfr::validate_config(cfg);
            std::printf("%s\n", tfr::config_to_json(cfg).dump(2).c_str());
            std::printf("config ok\n");
            return 0;
        }
        std::vector<std::string> stages;
        if (app.got_subcommand(c_generate)) stages = {"generate"};
        else if (app.got_subcommand(c_features)) stages = {"features"};
        else if (app.got_subcommand(c_tune)) stages = {"tune"};
        else if (app.got_subcommand(c_report)) stages = {"report"};
        else stages = tfr::all_stages(cfg);
        tfr::run_pipeline(cfg, stages);
        return 0;
    } catch (const tfr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const tfr::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const tfr::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
