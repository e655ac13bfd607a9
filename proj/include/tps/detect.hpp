#pragma once

#include <functional>
#include <vector>

#include "tps/formats.hpp"
#include "tps/signal_io.hpp"
#include "tps/tensor.hpp"

namespace tps {

struct DetectionPoint {
    int x = 0, y = 0, t = 0;
    float score = 0.0f;
};

// Model applied to a batch of windows: (B,1,L) in, (B,1,L) out.
using WindowFn = std::function<Tensor3f(const Tensor3f&)>;

// Covers [0,K) with length-`window` starts spaced by window*(1-overlap)
// (rounded), plus a final start at K-window when the last hop undershoots.
std::vector<int> window_starts(int length, int window, double overlap);

// Per-pixel sliding-window inference; overlapping outputs are averaged in
// fixed window order, so results do not depend on batch size. Sequences
// shorter than the window are reflect-padded and cropped back.
Cube reconstruct_sequence(const WindowFn& fn, const FrameSequence& seq, int window,
                          double overlap = 0.5, int batch = 256);

// Same, but starting from an already-extracted signal cube.
Cube reconstruct_cube(const WindowFn& fn, const Cube& signals, int window,
                      double overlap = 0.5, int batch = 256);

// Points at (x, y, t) where the pixel's series is >= tau and t heads a local
// maximum within radius 1: a plateau of equal values counts once, at its
// first index, when both plateau neighbors (treated as -inf past the ends)
// are strictly below it. Output ordered by (t, y, x).
std::vector<DetectionPoint> extract_points(const Cube& cube, double tau);

void save_points_csv(const std::string& path, const std::vector<DetectionPoint>& points);
std::vector<DetectionPoint> load_points_csv(const std::string& path);

}  // namespace tps
