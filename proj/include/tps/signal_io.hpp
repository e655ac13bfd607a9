#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tps/errors.hpp"
#include "tps/formats.hpp"
#include "tps/image_io.hpp"

namespace tps {

struct FrameSequence {
    std::vector<Image> frames;
    int h = 0, w = 0;
    double frame_period = 0.0;  // seconds per frame, 0 = unknown; metadata only

    int k() const { return static_cast<int>(frames.size()); }
};

struct TemporalSignal {
    Eigen::ArrayXf values;
    int x = -1, y = -1;  // source pixel; (-1,-1) = synthetic
};

struct SnrStats {
    double mu_target = 0.0;
    double mu_background = 0.0;
    double sigma_background = 0.0;
    double snr = 0.0;
};

// One pixel coordinate at one frame.
struct PixelAt {
    int x = 0, y = 0, t = 0;
};

// Frames ordered by lexicographic filename; all must decode to one channel at
// identical dimensions. bit_depth 8 or 16 requires that depth; 0 accepts either.
FrameSequence load_sequence(const std::string& dir_path, int bit_depth = 0);

TemporalSignal extract_signal(const FrameSequence& seq, int x, int y);

// One signal per pixel on the {x % stride == 0, y % stride == 0} lattice, in
// row-major (y outer) order.
std::vector<TemporalSignal> extract_training_pool(const FrameSequence& seq, int stride);

// mu_target over the given pixels. Background: for each frame holding target
// pixels, the 5x5 window centered on that frame's target centroid (rounded
// half-up), minus the target pixels themselves; mu/sigma pool over those
// windows, sigma as population standard deviation. A centroid window that
// leaves the frame is a range error; a perfectly flat background pool is a
// numerical error (degenerate background).
SnrStats compute_snr(const FrameSequence& seq, const std::vector<PixelAt>& target_pixels);

// Full-resolution cube of every pixel signal, (y, x, t) with t fastest.
Cube sequence_to_cube(const FrameSequence& seq);

// Pool signals packed into a cube over the stride lattice (ceil(H/s) rows).
Cube pool_to_cube(const FrameSequence& seq, int stride);

}  // namespace tps
