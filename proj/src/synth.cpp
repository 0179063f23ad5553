#include "kinemo/synth.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "kinemo/errors.hpp"
#include "kinemo/ingest.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

void SynthConfig::validate() const {
    if (n_subjects_per_class < 1) throw ConfigError("need at least one subject per class");
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
    if (!(fps > 0.0)) throw ConfigError("fps must be positive");
    if (control.nod_amplitude < 0.0 || control.shake_amplitude < 0.0)
        throw ConfigError("amplitudes must be nonnegative");
    if (!(control.nod_freq_hz > 0.0) || !(control.shake_freq_hz > 0.0))
        throw ConfigError("frequencies must be positive");
    for (double c : {control.ar_coeff, patient.ar_coeff})
        if (c < 0.0 || c >= 1.0) throw ConfigError("ar_coeff must lie in [0, 1)");
    if (control.ar_noise_sigma < 0.0 || patient.ar_noise_sigma < 0.0 ||
        patient.drift_sigma < 0.0)
        throw ConfigError("noise sigmas must be nonnegative");
    if (patient.drift_damping < 0.0 || patient.drift_damping >= 1.0)
        throw ConfigError("drift_damping must lie in [0, 1)");
}

namespace {

struct Ar1 {
    double coeff;
    double sigma;
    double state = 0.0;

    double step(Rng& rng) {
        state = coeff * state + sigma * rng.normal();
        return state;
    }
};

// Damped random walk; stationary std = sigma / sqrt(1 - damping^2).
struct DriftWalk {
    double damping;
    double sigma;
    double state = 0.0;

    double step(Rng& rng) {
        state = damping * state + sigma * rng.normal();
        return state;
    }
};

}  // namespace

HeadPoseSeries gen_subject(const SynthConfig& cfg, Label label, int subject_index) {
    cfg.validate();
    const int max_label = cfg.bands ? 3 : 1;
    if (label < 0 || label > max_label)
        throw ConfigError("label " + std::to_string(label) + " invalid for this mode");

    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(label),
                        static_cast<std::uint64_t>(subject_index)));

    // Band mode grades a control-style profile; binary patient = pure
    // drift-plus-noise (oscillation amplitude zero, full drift).
    double amp_scale, drift_scale;
    bool oscillate;
    if (cfg.bands) {
        amp_scale = cfg.severity_amplitude[static_cast<std::size_t>(label)];
        drift_scale = cfg.severity_drift[static_cast<std::size_t>(label)];
        oscillate = true;
    } else if (label == kControl) {
        amp_scale = 1.0;
        drift_scale = 0.0;
        oscillate = true;
    } else {
        amp_scale = 0.0;
        drift_scale = 1.0;
        oscillate = false;
    }

    const double nod_amp =
        cfg.control.nod_amplitude * amp_scale * rng.uniform(0.8, 1.2);
    const double shake_amp =
        cfg.control.shake_amplitude * amp_scale * rng.uniform(0.8, 1.2);
    const double phase_nod = rng.uniform(0.0, 2.0 * M_PI);
    const double phase_shake = rng.uniform(0.0, 2.0 * M_PI);

    const auto& noise_params = (oscillate ? cfg.control.ar_noise_sigma : cfg.patient.ar_noise_sigma);
    const double ar_coeff = oscillate ? cfg.control.ar_coeff : cfg.patient.ar_coeff;
    Ar1 noise_p{ar_coeff, noise_params};
    Ar1 noise_y{ar_coeff, noise_params};
    Ar1 noise_r{ar_coeff, noise_params};
    const double drift_sigma = cfg.patient.drift_sigma * drift_scale;
    DriftWalk drift_p{cfg.patient.drift_damping, drift_sigma};
    DriftWalk drift_y{cfg.patient.drift_damping, drift_sigma};
    DriftWalk drift_r{cfg.patient.drift_damping, drift_sigma};

    const auto n = static_cast<std::size_t>(std::lround(cfg.duration_s * cfg.fps));
    HeadPoseSeries s;
    s.subject_id = label_name(label, cfg.bands) + "_" +
                   (subject_index < 10 ? "00" : subject_index < 100 ? "0" : "") +
                   std::to_string(subject_index);
    s.recording_id = s.subject_id;
    s.fps = cfg.fps;
    s.pitch.resize(n);
    s.yaw.resize(n);
    s.roll.resize(n);
    s.valid_mask.assign(n, true);
    for (std::size_t t = 0; t < n; ++t) {
        const double time = static_cast<double>(t) / cfg.fps;
        double p = noise_p.step(rng) + drift_p.step(rng);
        double y = noise_y.step(rng) + drift_y.step(rng);
        double r = noise_r.step(rng) + drift_r.step(rng);
        if (oscillate) {
            p += nod_amp * std::sin(2.0 * M_PI * cfg.control.nod_freq_hz * time + phase_nod);
            y += shake_amp *
                 std::sin(2.0 * M_PI * cfg.control.shake_freq_hz * time + phase_shake);
        }
        s.pitch[t] = p;
        s.yaw[t] = y;
        s.roll[t] = r;
    }
    s.validate();
    return s;
}

Manifest gen_benchmark(const SynthConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "poses", ec);
    if (ec) throw DataError("cannot create " + out_dir + "/poses: " + ec.message());

    const int n_classes = cfg.bands ? 4 : 2;
    static const char* kSplits[] = {"train", "dev", "test"};
    static const int kBandBdi[] = {5, 16, 24, 40};  // representative band scores

    Manifest manifest;
    manifest.dataset_name = cfg.bands ? "synth-bands" : "synth-binary";
    for (Label label = 0; label < n_classes; ++label) {
        for (int i = 0; i < cfg.n_subjects_per_class; ++i) {
            const HeadPoseSeries series = gen_subject(cfg, label, i);
            const std::string rel = "poses/" + series.subject_id + ".csv";

            DelimitedTable table;
            table.header = {"frame", "timestamp", "pose_pitch", "pose_yaw", "pose_roll",
                            "success"};
            for (std::size_t t = 0; t < series.size(); ++t)
                table.rows.push_back({std::to_string(t),
                                      format_double(static_cast<double>(t) / cfg.fps),
                                      format_double(series.pitch[t]),
                                      format_double(series.yaw[t]),
                                      format_double(series.roll[t]),
                                      series.valid_mask[t] ? "1" : "0"});
            write_delimited((fs::path(out_dir) / rel).string(), table);

            SubjectRecord rec;
            rec.subject_id = series.subject_id;
            rec.recording_path = rel;
            rec.split = kSplits[i % 3];
            if (cfg.bands)
                rec.bdi_score = kBandBdi[static_cast<std::size_t>(label)];
            else
                rec.binary_label = label;
            manifest.records.push_back(std::move(rec));
        }
    }
    manifest.validate();
    save_manifest((fs::path(out_dir) / "manifest.txt").string(), manifest);
    return manifest;
}

}  // namespace kinemo
