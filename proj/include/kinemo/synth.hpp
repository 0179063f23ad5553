#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "kinemo/types.hpp"

namespace kinemo {

struct ControlMotionParams {
    double nod_amplitude = 0.17;   // pitch oscillation, rad
    double nod_freq_hz = 0.4;      // whole cycles per default 5 s segment
    double shake_amplitude = 0.13; // yaw oscillation, rad
    double shake_freq_hz = 0.6;
    double ar_noise_sigma = 0.01;
    double ar_coeff = 0.9;
};

struct PatientMotionParams {
    double drift_sigma = 0.0012;   // per-frame posture-walk innovation, rad
    double drift_damping = 0.999;  // bounds the walk well inside (-pi, pi)
    double ar_noise_sigma = 0.01;
    double ar_coeff = 0.9;
};

struct SynthConfig {
    int n_subjects_per_class = 20;
    double duration_s = 300.0;
    double fps = 30.0;
    ControlMotionParams control;
    PatientMotionParams patient;
    // Band mode grades the control profile: oscillation amplitude falls and
    // posture drift grows from minimal to severe.
    std::array<double, 4> severity_amplitude = {1.0, 0.6, 0.3, 0.08};
    std::array<double, 4> severity_drift = {0.0, 0.7, 1.4, 2.2};
    bool bands = false;
    std::uint64_t seed = 0;

    void validate() const;
};

// Deterministic in (seed, label, subject_index).
HeadPoseSeries gen_subject(const SynthConfig& cfg, Label label, int subject_index);

// Writes pose files under <out_dir>/poses/ plus a manifest, balanced across
// classes with train/dev/test splits assigned round-robin per class.
// Returns the manifest (also saved to <out_dir>/manifest.txt).
Manifest gen_benchmark(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace kinemo
