#pragma once

#include <string>

#include "kinemo/eval.hpp"
#include "kinemo/runconfig.hpp"

namespace kinemo {

// Loads the manifest, ingests every recording (in parallel), cleans and
// resamples to the canonical rate, and resolves task labels.
Dataset load_dataset(const RunConfig& cfg);

// ExperimentConfig view of a RunConfig, with the provenance snapshot filled.
ExperimentConfig experiment_config(const RunConfig& cfg);

// CLI entry points. Each writes its outputs under cfg.out_dir and throws a
// kinemo::Error subclass on failure.
void cmd_synth(const RunConfig& cfg);
void cmd_fit_kinemes(const RunConfig& cfg);
void cmd_featurize(const RunConfig& cfg);
void cmd_train_eval(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg, const std::string& which);  // chunk-length | dims
void cmd_export_kinemes(const RunConfig& cfg);

}  // namespace kinemo
