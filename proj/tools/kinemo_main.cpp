#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "kinemo/errors.hpp"
#include "kinemo/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = 0;
};

kinemo::RunConfig resolve_config(const GlobalFlags& flags) {
    kinemo::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = kinemo::RunConfig::from_file(flags.config_path);
    if (flags.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.synth.seed = cfg.seed;
    }
    if (flags.workers > 0) cfg.workers = flags.workers;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kineme-based head-motion analysis"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file (JSON)");
    app.add_option("--seed", flags.seed, "master seed override");
    app.add_option("--workers", flags.workers, "worker thread count override");
    app.add_option("--out", flags.out_dir, "output directory override");

    auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
    auto* fit = app.add_subcommand("fit-kinemes", "fit and persist a kineme model");
    auto* feat = app.add_subcommand("featurize", "export per-chunk feature table");
    auto* train_eval = app.add_subcommand("train-eval", "run the evaluation protocol");
    auto* ablate = app.add_subcommand("ablate", "run an ablation study");
    std::string which;
    ablate->add_option("--which", which, "chunk-length or dims")->required();
    auto* export_k = app.add_subcommand("export-kinemes", "export kineme trajectories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const kinemo::RunConfig cfg = resolve_config(flags);
        if (synth->parsed()) kinemo::cmd_synth(cfg);
        if (fit->parsed()) kinemo::cmd_fit_kinemes(cfg);
        if (feat->parsed()) kinemo::cmd_featurize(cfg);
        if (train_eval->parsed()) kinemo::cmd_train_eval(cfg);
        if (ablate->parsed()) kinemo::cmd_ablate(cfg, which);
        if (export_k->parsed()) kinemo::cmd_export_kinemes(cfg);
    } catch (const kinemo::ConfigError& e) {
        std::cerr << "kinemo: " << e.what() << "\n";
        return 1;
    } catch (const kinemo::DataError& e) {
        std::cerr << "kinemo: " << e.what() << "\n";
        return 2;
    } catch (const kinemo::NumericError& e) {
        std::cerr << "kinemo: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "kinemo: unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
