#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tps/roceval.hpp"
#include "tps/signal_io.hpp"

namespace tps {

struct PsfParams {
    double a = 1.0;        // peak intensity
    double sigma_x = 1.0;  // pixels
    double sigma_y = 1.0;

    void validate() const {
        if (a <= 0 || sigma_x <= 0 || sigma_y <= 0)
            throw ConfigError("psf requires positive amplitude and sigmas");
    }
};

struct TargetSpec {
    double x0 = 0.0, y0 = 0.0;  // centroid at t0
    double vx = 0.0, vy = 0.0;  // pixels per frame
    PsfParams psf;
    int t0 = 0, t1 = -1;  // inclusive lifetime; t1 < 0 means the last frame
    double snr = 0.0;     // > 0: amplitude back-solved to hit this SNR
};

enum class BackgroundKind { flat, gradient, drift };

struct SceneConfig {
    int h = 64, w = 64, k = 300;
    BackgroundKind background = BackgroundKind::flat;
    double bg_level = 100.0;
    double bg_amp = 0.0;     // gradient/drift spatial amplitude
    double bg_drift = 0.0;   // drift phase step per frame, cycles
    double noise_sigma = 5.0;
    std::vector<TargetSpec> targets;
    uint64_t seed = 42;
};

// PSF value at offset (dx, dy) from center.
double psf_value(const PsfParams& p, double dx, double dy);

// Adds the PSF around a sub-pixel center, sampling at pixel centers inside a
// ceil(4*max sigma)+1 radius patch clipped to the frame.
void add_psf(Image& frame, const PsfParams& p, double cx, double cy);

struct SceneResult {
    FrameSequence frames;
    GroundTruth gt;
    std::vector<SnrStats> target_snr;   // one per target
    std::vector<double> solved_a;       // amplitude used per target
};

// frames = background + targets + N(0, noise_sigma^2); noise streams derive
// from (seed, frame) and background phases from the seed, so any component can
// be regenerated alone and the pieces sum to the full scene exactly. SNR per
// target is measured with the noiseless 3x3 footprint embedded in the noisy
// scene: target pixels are the 3x3 block at the rounded centroid, background
// is the surrounding 5x5 ring.
SceneResult generate_sequence(const SceneConfig& cfg);

// Amplitude that makes the measured footprint contrast hit `snr` against
// noise sigma_n. Models what compute_snr sees: the 5x5 ring picks up PSF
// spill, which both lifts the background mean and widens its variance, so
// snr(A) = A*(u - s) / sqrt(A^2*var_s + sigma_n^2) with u the mean unit
// response over the 3x3 footprint, s and var_s the ring spill statistics,
// all pooled over the lifetime. Spill variance caps the reachable snr; a
// request past that cap is a config error.
double solve_amplitude(const TargetSpec& t, int k_total, double snr, double sigma_n);

}  // namespace tps
