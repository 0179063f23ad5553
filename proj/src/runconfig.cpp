#include "kinemo/runconfig.hpp"

#include <nlohmann/json.hpp>

#include "kinemo/errors.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

namespace {

using nlohmann::json;

double jdouble(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) return parse_double(v.get<std::string>(), key);
    return v.get<double>();
}

int jint(const json& j, const char* key, int fallback) {
    return j.contains(key) ? j.at(key).get<int>() : fallback;
}

std::string jstr(const json& j, const char* key, const std::string& fallback) {
    return j.contains(key) ? j.at(key).get<std::string>() : fallback;
}

int dim_from_name(const std::string& name) {
    if (name == "pitch" || name == "p") return 0;
    if (name == "yaw" || name == "y") return 1;
    if (name == "roll" || name == "r") return 2;
    throw ConfigError("unknown angular dimension '" + name + "'");
}

Grid grid_from_json(const json& j) {
    // object of axis -> list of values; points enumerated in lexicographic
    // key order, the last axis varying fastest
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& [key, values] : j.items()) {
        std::vector<std::string> vals;
        for (const auto& v : values)
            vals.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        if (vals.empty()) throw ConfigError("grid axis '" + key + "' is empty");
        axes.push_back({key, std::move(vals)});
    }
    if (axes.empty()) throw ConfigError("empty grid object");
    Grid grid;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
        HyperParams point;
        for (std::size_t a = 0; a < axes.size(); ++a)
            point[axes[a].first] = axes[a].second[idx[a]];
        grid.push_back(std::move(point));
        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].second.size()) break;
            idx[a] = 0;
            if (a == 0) return grid;
        }
    }
}

json grid_to_json(const Grid& grid) {
    json points = json::array();
    for (const auto& p : grid) points.push_back(p);
    return points;
}

}  // namespace

void RunConfig::validate() const {
    segmentation.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(source_fps > 0.0) || !(target_fps > 0.0)) throw ConfigError("fps must be positive");
    if (max_gap_s < 0.0) throw ConfigError("max_gap_s must be nonnegative");
    if (kineme.K < 2) throw ConfigError("kineme K must be >= 2");
    if (kineme.variance_target <= 0.0 || kineme.variance_target > 1.0)
        throw ConfigError("variance_target must lie in (0, 1]");
    if (protocol.kind == ProtocolKind::repeated_cv &&
        (protocol.folds < 2 || protocol.repetitions < 1))
        throw ConfigError("repeated CV needs folds >= 2 and repetitions >= 1");
    if (mode == FeatureMode::two_class && bands)
        throw ConfigError("2ckd mode is defined for binary labels only");
    for (double len : ablate_chunk_lengths)
        if (len < segmentation.seg_len_s)
            throw ConfigError("ablation chunk length below segment length");
    synth.validate();
}

std::string RunConfig::snapshot() const {
    json j;
    j["seed"] = seed;
    j["workers"] = workers;
    j["out_dir"] = out_dir;
    j["dataset"] = {
        {"manifest", manifest_path},
        {"fps", format_double(source_fps)},
        {"target_fps", format_double(target_fps)},
        {"max_gap_s", format_double(max_gap_s)},
        {"labels", bands ? "bands" : "binary"},
        {"schema",
         {{"pitch", schema.pitch_col},
          {"yaw", schema.yaw_col},
          {"roll", schema.roll_col},
          {"success", schema.success_col},
          {"units", schema.degrees ? "degrees" : "radians"},
          {"delimiter", std::string(1, schema.delimiter)}}},
    };
    j["segmentation"] = {{"seg_len_s", format_double(segmentation.seg_len_s)},
                         {"overlap_frac", format_double(segmentation.overlap_frac)},
                         {"chunk_len_s", format_double(segmentation.chunk_len_s)}};
    j["kineme"] = {{"k", kineme.K},
                   {"variance_target", format_double(kineme.variance_target)},
                   {"fixed_dim", kineme.fixed_dim},
                   {"restarts", kineme.n_restarts},
                   {"em_max_iters", kineme.em_max_iters},
                   {"em_tol", format_double(kineme.em_tol)},
                   {"variance_floor", format_double(kineme.variance_floor)}};
    j["mode"] = feature_mode_name(mode);
    j["classifier"] = {{"family", family_name(family)},
                       {"grid", grid.empty() ? json("default") : grid_to_json(grid)}};
    j["protocol"] = {
        {"type", protocol.kind == ProtocolKind::repeated_cv ? "repeated_cv" : "fixed_splits"},
        {"folds", protocol.folds},
        {"repetitions", protocol.repetitions},
        {"inner_folds", protocol.inner_folds}};
    j["synth"] = {{"n_subjects_per_class", synth.n_subjects_per_class},
                  {"duration_s", format_double(synth.duration_s)},
                  {"fps", format_double(synth.fps)},
                  {"bands", synth.bands},
                  {"control",
                   {{"nod_amplitude", format_double(synth.control.nod_amplitude)},
                    {"nod_freq_hz", format_double(synth.control.nod_freq_hz)},
                    {"shake_amplitude", format_double(synth.control.shake_amplitude)},
                    {"shake_freq_hz", format_double(synth.control.shake_freq_hz)},
                    {"ar_noise_sigma", format_double(synth.control.ar_noise_sigma)},
                    {"ar_coeff", format_double(synth.control.ar_coeff)}}},
                  {"patient",
                   {{"drift_sigma", format_double(synth.patient.drift_sigma)},
                    {"drift_damping", format_double(synth.patient.drift_damping)},
                    {"ar_noise_sigma", format_double(synth.patient.ar_noise_sigma)},
                    {"ar_coeff", format_double(synth.patient.ar_coeff)}}},
                  {"severity_amplitude",
                   {format_double(synth.severity_amplitude[0]),
                    format_double(synth.severity_amplitude[1]),
                    format_double(synth.severity_amplitude[2]),
                    format_double(synth.severity_amplitude[3])}},
                  {"severity_drift",
                   {format_double(synth.severity_drift[0]),
                    format_double(synth.severity_drift[1]),
                    format_double(synth.severity_drift[2]),
                    format_double(synth.severity_drift[3])}}};
    json lens = json::array();
    for (double l : ablate_chunk_lengths) lens.push_back(format_double(l));
    static const char* kDimNames[] = {"pitch", "yaw", "roll"};
    json dsets = json::array();
    for (const auto& ds : ablate_dim_sets) {
        json names = json::array();
        for (int d : ds) names.push_back(kDimNames[d]);
        dsets.push_back(std::move(names));
    }
    j["ablate"] = {{"chunk_lengths", lens}, {"dim_sets", dsets}};
    if (!model_path.empty()) j["model_path"] = model_path;
    return j.dump(2);
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_json_text(read_text_file(path), path);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + origin + ": " + e.what());
    }
    try {
        RunConfig cfg;
        cfg.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
        cfg.workers = jint(j, "workers", 1);
        cfg.out_dir = jstr(j, "out_dir", "out");
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            cfg.manifest_path = jstr(d, "manifest", "");
            cfg.source_fps = jdouble(d, "fps", 30.0);
            cfg.target_fps = jdouble(d, "target_fps", 30.0);
            cfg.max_gap_s = jdouble(d, "max_gap_s", 0.5);
            const std::string labels = jstr(d, "labels", "binary");
            if (labels != "binary" && labels != "bands")
                throw ConfigError("labels must be 'binary' or 'bands'");
            cfg.bands = labels == "bands";
            if (d.contains("schema")) {
                const auto& s = d.at("schema");
                cfg.schema.pitch_col = jstr(s, "pitch", cfg.schema.pitch_col);
                cfg.schema.yaw_col = jstr(s, "yaw", cfg.schema.yaw_col);
                cfg.schema.roll_col = jstr(s, "roll", cfg.schema.roll_col);
                cfg.schema.success_col = jstr(s, "success", cfg.schema.success_col);
                const std::string units = jstr(s, "units", "radians");
                if (units != "radians" && units != "degrees")
                    throw ConfigError("schema units must be 'radians' or 'degrees'");
                cfg.schema.degrees = units == "degrees";
                const std::string delim = jstr(s, "delimiter", ",");
                if (delim.size() != 1) throw ConfigError("delimiter must be one character");
                cfg.schema.delimiter = delim[0];
            }
        }
        if (j.contains("segmentation")) {
            const auto& s = j.at("segmentation");
            cfg.segmentation.seg_len_s = jdouble(s, "seg_len_s", 5.0);
            cfg.segmentation.overlap_frac = jdouble(s, "overlap_frac", 0.5);
            cfg.segmentation.chunk_len_s = jdouble(s, "chunk_len_s", 60.0);
        }
        if (j.contains("kineme")) {
            const auto& k = j.at("kineme");
            cfg.kineme.K = jint(k, "k", 16);
            cfg.kineme.variance_target = jdouble(k, "variance_target", 0.95);
            cfg.kineme.fixed_dim = jint(k, "fixed_dim", 0);
            cfg.kineme.n_restarts = jint(k, "restarts", 5);
            cfg.kineme.em_max_iters = jint(k, "em_max_iters", 300);
            cfg.kineme.em_tol = jdouble(k, "em_tol", 1e-6);
            cfg.kineme.variance_floor = jdouble(k, "variance_floor", 1e-6);
        }
        const std::string mode = jstr(j, "mode", "hckd");
        if (mode == "2ckd")
            cfg.mode = FeatureMode::two_class;
        else if (mode == "hckd")
            cfg.mode = FeatureMode::healthy_control;
        else
            throw ConfigError("mode must be '2ckd' or 'hckd'");
        if (j.contains("classifier")) {
            const auto& c = j.at("classifier");
            cfg.family = family_from_name(jstr(c, "family", "svc"));
            if (c.contains("grid") && c.at("grid").is_object())
                cfg.grid = grid_from_json(c.at("grid"));
        }
        if (j.contains("protocol")) {
            const auto& p = j.at("protocol");
            const std::string type = jstr(p, "type", "repeated_cv");
            if (type == "repeated_cv")
                cfg.protocol.kind = ProtocolKind::repeated_cv;
            else if (type == "fixed_splits")
                cfg.protocol.kind = ProtocolKind::fixed_splits;
            else
                throw ConfigError("protocol type must be 'repeated_cv' or 'fixed_splits'");
            cfg.protocol.folds = jint(p, "folds", 10);
            cfg.protocol.repetitions = jint(p, "repetitions", 5);
            cfg.protocol.inner_folds = jint(p, "inner_folds", 5);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            cfg.synth.n_subjects_per_class = jint(s, "n_subjects_per_class", 20);
            cfg.synth.duration_s = jdouble(s, "duration_s", 300.0);
            cfg.synth.fps = jdouble(s, "fps", 30.0);
            cfg.synth.bands = s.contains("bands") && s.at("bands").get<bool>();
            if (s.contains("control")) {
                const auto& c = s.at("control");
                cfg.synth.control.nod_amplitude = jdouble(c, "nod_amplitude", 0.17);
                cfg.synth.control.nod_freq_hz = jdouble(c, "nod_freq_hz", 0.4);
                cfg.synth.control.shake_amplitude = jdouble(c, "shake_amplitude", 0.13);
                cfg.synth.control.shake_freq_hz = jdouble(c, "shake_freq_hz", 0.6);
                cfg.synth.control.ar_noise_sigma = jdouble(c, "ar_noise_sigma", 0.01);
                cfg.synth.control.ar_coeff = jdouble(c, "ar_coeff", 0.9);
            }
            if (s.contains("patient")) {
                const auto& p = s.at("patient");
                cfg.synth.patient.drift_sigma = jdouble(p, "drift_sigma", 0.0012);
                cfg.synth.patient.drift_damping = jdouble(p, "drift_damping", 0.999);
                cfg.synth.patient.ar_noise_sigma = jdouble(p, "ar_noise_sigma", 0.01);
                cfg.synth.patient.ar_coeff = jdouble(p, "ar_coeff", 0.9);
            }
            for (const char* key : {"severity_amplitude", "severity_drift"}) {
                if (!s.contains(key)) continue;
                const auto& arr = s.at(key);
                if (!arr.is_array() || arr.size() != 4)
                    throw ConfigError(std::string(key) + " must list 4 values");
                for (std::size_t i = 0; i < 4; ++i) {
                    const double v = arr[i].is_string()
                                         ? parse_double(arr[i].get<std::string>(), key)
                                         : arr[i].get<double>();
                    if (std::string(key) == "severity_amplitude")
                        cfg.synth.severity_amplitude[i] = v;
                    else
                        cfg.synth.severity_drift[i] = v;
                }
            }
        }
        cfg.synth.seed = cfg.seed;
        if (j.contains("ablate")) {
            const auto& a = j.at("ablate");
            if (a.contains("chunk_lengths")) {
                cfg.ablate_chunk_lengths.clear();
                for (const auto& v : a.at("chunk_lengths"))
                    cfg.ablate_chunk_lengths.push_back(
                        v.is_string() ? parse_double(v.get<std::string>(), "chunk_lengths")
                                      : v.get<double>());
            }
            if (a.contains("dim_sets")) {
                cfg.ablate_dim_sets.clear();
                for (const auto& ds : a.at("dim_sets")) {
                    std::vector<int> dims;
                    for (const auto& name : ds) dims.push_back(dim_from_name(name));
                    cfg.ablate_dim_sets.push_back(std::move(dims));
                }
            }
        }
        cfg.model_path = jstr(j, "model_path", "");
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError("bad configuration in " + origin + ": " + e.what());
    }
}

}  // namespace kinemo
