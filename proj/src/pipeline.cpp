#include "kinemo/pipeline.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "kinemo/errors.hpp"
#include "kinemo/parallel.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

namespace fs = std::filesystem;

namespace {

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + cfg.out_dir);
}

std::vector<std::string> provenance(const RunConfig& cfg) {
    std::vector<std::string> lines;
    lines.push_back("seed: " + std::to_string(cfg.seed));
    lines.push_back("run_config: " + nlohmann::json::parse(cfg.snapshot()).dump());
    return lines;
}

// Training-side records: the train split when the manifest declares splits,
// everything otherwise.
std::vector<std::size_t> training_items(const Dataset& dataset) {
    bool any_split = false;
    for (const auto& item : dataset.items) any_split |= item.record.split.has_value();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dataset.items.size(); ++i)
        if (!any_split || (dataset.items[i].record.split &&
                           *dataset.items[i].record.split == "train"))
            out.push_back(i);
    if (out.empty()) throw DataError("no training-side recordings in the manifest");
    return out;
}

std::string default_model_path(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "kineme_model.json").string();
}

nlohmann::json metrics_json(const Metrics& m) {
    return {{"acc", format_double(m.accuracy)},
            {"f1", format_double(m.weighted_f1)},
            {"pr", format_double(m.precision)},
            {"re", format_double(m.recall)}};
}

void write_report(const std::string& path, const EvalReport& report, const RunConfig& cfg) {
    nlohmann::json j;
    j["level"] = report.level;
    j["seed"] = cfg.seed;
    j["run_config"] = nlohmann::json::parse(cfg.snapshot());
    j["runs"] = nlohmann::json::array();
    for (const auto& m : report.per_run) j["runs"].push_back(metrics_json(m));
    j["mean"] = metrics_json(report.mean);
    j["stddev"] = metrics_json(report.stddev);
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.manifest_path.empty()) throw ConfigError("no dataset manifest configured");
    const Manifest manifest = load_manifest(cfg.manifest_path);
    const fs::path base = fs::path(cfg.manifest_path).parent_path();

    Dataset dataset;
    dataset.name = manifest.dataset_name;
    dataset.bands = cfg.bands;
    dataset.items.resize(manifest.records.size());
    parallel_for(manifest.records.size(), cfg.workers, [&](std::size_t i) {
        const auto& rec = manifest.records[i];
        fs::path p(rec.recording_path);
        if (p.is_relative()) p = base / p;
        LabeledSeries item;
        item.record = rec;
        HeadPoseSeries raw = load_headpose_csv(p.string(), cfg.schema, cfg.source_fps);
        raw.subject_id = rec.subject_id;
        item.series = clean_and_resample(raw, cfg.target_fps, cfg.max_gap_s);
        item.label = record_label(rec, cfg.bands);
        dataset.items[i] = std::move(item);
    });
    return dataset;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
    ExperimentConfig e;
    e.mode = cfg.mode;
    e.family = cfg.family;
    e.grid = cfg.grid;
    e.segmentation = cfg.segmentation;
    e.kineme = cfg.kineme;
    e.protocol = cfg.protocol;
    e.seed = cfg.seed;
    e.workers = cfg.workers;
    e.config_snapshot = cfg.snapshot();
    return e;
}

void cmd_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    SynthConfig synth = cfg.synth;
    synth.seed = cfg.seed;
    gen_benchmark(synth, cfg.out_dir);
}

void cmd_fit_kinemes(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Dataset dataset = load_dataset(cfg);
    std::vector<Segment> segments;
    for (std::size_t i : training_items(dataset)) {
        const auto& item = dataset.items[i];
        if (cfg.mode == FeatureMode::healthy_control && item.label != kControl) continue;
        auto segs = make_segments(item.series, cfg.segmentation);
        for (auto& s : segs) segments.push_back(std::move(s));
    }
    KinemeFitConfig kcfg = cfg.kineme;
    kcfg.seed = derive_seed(cfg.seed, 1);
    KinemeModel model = fit_kineme_model(segments, kcfg);
    model.fps = cfg.target_fps;
    save_kineme_model(default_model_path(cfg), model);
}

void cmd_featurize(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Dataset dataset = load_dataset(cfg);
    const std::string model_path =
        cfg.model_path.empty() ? default_model_path(cfg) : cfg.model_path;
    const KinemeModel model = load_kineme_model(model_path);

    DiscriminativeSet dset;
    if (cfg.mode == FeatureMode::two_class) {
        std::vector<KinemeAssignment> control, patient;
        for (std::size_t i : training_items(dataset)) {
            const auto& item = dataset.items[i];
            for (const auto& seg : make_segments(item.series, cfg.segmentation))
                (item.label == kControl ? control : patient)
                    .push_back(assign_kineme(model, seg));
        }
        if (control.empty() || patient.empty())
            throw DataError("2ckd selection needs training segments from both classes");
        dset = select_discriminative(class_histogram(control, model.K),
                                     class_histogram(patient, model.K));
    }

    std::vector<ChunkFeatures> features;
    for (const auto& item : dataset.items) {
        for (const auto& chunk : make_chunks(item.series, cfg.segmentation, item.label)) {
            features.push_back(cfg.mode == FeatureMode::two_class
                                   ? feat_2ckd(chunk, model, dset)
                                   : feat_hckd(chunk, model));
        }
    }
    write_feature_table((fs::path(cfg.out_dir) / "features.csv").string(), features,
                        provenance(cfg));
}

void cmd_train_eval(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Dataset dataset = load_dataset(cfg);
    const auto [chunk_report, video_report] = run_protocol(dataset, experiment_config(cfg));
    write_report((fs::path(cfg.out_dir) / "report_chunk.json").string(), chunk_report, cfg);
    write_report((fs::path(cfg.out_dir) / "report_video.json").string(), video_report, cfg);

    std::vector<AblationRow> rows;
    for (const auto* rep : {&chunk_report, &video_report}) {
        AblationRow row;
        row.condition = feature_mode_name(cfg.mode);
        row.classifier = family_name(cfg.family);
        row.level = rep->level;
        row.chunk_len_s = cfg.segmentation.chunk_len_s;
        row.metrics = rep->mean;
        rows.push_back(std::move(row));
    }
    write_ablation_table((fs::path(cfg.out_dir) / "metrics.csv").string(), rows,
                         provenance(cfg));
}

void cmd_ablate(const RunConfig& cfg, const std::string& which) {
    ensure_out_dir(cfg);
    const Dataset dataset = load_dataset(cfg);
    std::vector<AblationRow> rows;
    std::string name;
    if (which == "chunk-length") {
        rows = ablate_chunk_length(dataset, experiment_config(cfg), cfg.ablate_chunk_lengths);
        name = "ablation_chunk_length.csv";
    } else if (which == "dims") {
        rows = ablate_dims(dataset, experiment_config(cfg), cfg.ablate_dim_sets);
        name = "ablation_dims.csv";
    } else {
        throw ConfigError("unknown ablation '" + which + "' (chunk-length or dims)");
    }
    write_ablation_table((fs::path(cfg.out_dir) / name).string(), rows, provenance(cfg));
}

void cmd_export_kinemes(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const std::string model_path =
        cfg.model_path.empty() ? default_model_path(cfg) : cfg.model_path;
    const KinemeModel model = load_kineme_model(model_path);

    DelimitedTable table;
    table.preamble = provenance(cfg);
    table.header = {"kineme_id", "frame", "pitch", "yaw", "roll"};
    for (int k = 0; k < model.K; ++k) {
        const Reconstruction r = reconstruct(model, k);
        for (Eigen::Index t = 0; t < r.values.rows(); ++t)
            table.rows.push_back({std::to_string(k), std::to_string(t),
                                  format_double(r.values(t, 0)), format_double(r.values(t, 1)),
                                  format_double(r.values(t, 2))});
    }
    write_delimited((fs::path(cfg.out_dir) / "kineme_trajectories.csv").string(), table);
}

}  // namespace kinemo
