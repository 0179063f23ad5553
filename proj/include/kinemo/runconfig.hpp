#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinemo/eval.hpp"
#include "kinemo/ingest.hpp"
#include "kinemo/synth.hpp"

namespace kinemo {

// One configuration document drives every CLI command; command-line flags
// override individual values. The canonical serialized form is embedded in
// every output for provenance.
struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir = "out";

    // dataset ingestion
    std::string manifest_path;
    PoseSchema schema;
    double source_fps = 30.0;
    double target_fps = 30.0;  // canonical rate applied before segmentation
    double max_gap_s = 0.5;
    bool bands = false;

    // experiment
    FeatureMode mode = FeatureMode::healthy_control;
    Family family = Family::svc;
    Grid grid;  // empty selects the family's default grid
    SegmentationConfig segmentation;
    KinemeFitConfig kineme;
    ProtocolSettings protocol;

    SynthConfig synth;

    std::vector<double> ablate_chunk_lengths = {15.0, 45.0, 75.0, 105.0, 135.0};
    std::vector<std::vector<int>> ablate_dim_sets = {{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}};

    std::string model_path;  // consumed by featurize / export-kinemes

    void validate() const;
    std::string snapshot() const;  // canonical JSON text of this configuration

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);
};

}  // namespace kinemo
