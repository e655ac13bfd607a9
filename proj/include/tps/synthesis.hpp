#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tps/errors.hpp"
#include "tps/formats.hpp"
#include "tps/rng.hpp"
#include "tps/signal_io.hpp"

namespace tps {

struct GaussianPulseParams {
    double amplitude = 1.0;  // native intensity units
    double center = 0.0;     // fractional frame index
    double sigma = 1.0;      // frames; effective width is about 6 sigma
};

struct SamplingRanges {
    double a_min = 10.0, a_max = 30.0;  // amplitude
    double s_min = 5.0, s_max = 15.0;   // effective width, sigma = S/6

    // collapsed ranges (min == max) degenerate to a point draw and are allowed
    void validate() const {
        if (!(a_min <= a_max) || !(s_min <= s_max) || a_min <= 0 || s_min <= 0)
            throw ConfigError("sampling ranges require 0 < min <= max");
    }
};

struct TrainingSample {
    Eigen::ArrayXf input;  // background + pulses
    Eigen::ArrayXf label;  // unit-amplitude pulses, elementwise max, in [0,1]
};

// values[j] = A * exp(-(j - T)^2 / (2 sigma^2))
Eigen::ArrayXf gaussian_pulse(const GaussianPulseParams& p, int length);

// A ~ U(a_min, a_max); S ~ U(s_min, s_max) with sigma = S/6; T ~ U(0, K-1).
GaussianPulseParams sample_params(const SamplingRanges& ranges, Rng& rng, int length);

// input = background + sum of pulses; label = elementwise max of the same
// pulses at unit amplitude (all-zero for an empty pulse list).
TrainingSample synthesize_sample(const Eigen::ArrayXf& background,
                                 const std::vector<GaussianPulseParams>& pulses);

// Mirror-extends the tail (no edge repeat) until the signal reaches `length`.
Eigen::ArrayXf reflect_pad(const Eigen::ArrayXf& values, int length);

// Each sample: uniform pool signal, uniform window start, one injected pulse
// with probability p_pos. Per-sample RNG streams derive from (seed, index) so
// the result is independent of evaluation order.
RawDataset build_dataset(const std::vector<TemporalSignal>& pool,
                         const SamplingRanges& ranges, int n_samples, int window,
                         double p_pos, uint64_t seed);

}  // namespace tps
