#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tps/detect.hpp"
#include "tps/errors.hpp"

namespace tps {

struct MiningParams {
    double d = 3.0;  // spatial radius, pixels
    int dt = 2;      // max temporal gap, frames
    int l = 5;       // min trajectory length, points

    void validate() const {
        if (d <= 0 || dt < 1 || l < 2)
            throw ConfigError("mining params require d > 0, dt >= 1, l >= 2");
    }
};

struct MiningBounds {
    double d_min = 1.0, d_max = 10.0;
    double dt_min = 1.0, dt_max = 5.0;
    double l_min = 5.0, l_max = 0.0;  // l_max <= 0: use max(6, T/4)
    int trials = 100;

    double effective_l_max(int total_frames) const {
        return l_max > 0 ? l_max : std::max(6.0, total_frames / 4.0);
    }

    void validate(int total_frames) const {
        if (d_min > d_max || dt_min > dt_max || l_min > effective_l_max(total_frames) ||
            d_min <= 0 || dt_min < 1 || l_min < 2)
            throw ConfigError("mining bounds out of order or below minimums");
        if (trials < 1) throw ConfigError("gtm.trials must be >= 1");
    }
};

// Undirected edges (i, j), i < j: spatial Euclidean distance <= d and
// 0 < |t_i - t_j| <= dt. Grid-hashed by frame; output matches the quadratic
// definition exactly.
std::vector<std::pair<int32_t, int32_t>> build_graph(
    const std::vector<DetectionPoint>& points, double d, int dt);

struct Trajectory {
    std::vector<DetectionPoint> points;  // sorted by (t, y, x)
    int t_first = 0, t_last = 0;
};

// Connected components with at least l points, each time-sorted; trajectories
// ordered by their first point.
std::vector<Trajectory> extract_trajectories(const std::vector<DetectionPoint>& points,
                                             const std::vector<std::pair<int32_t, int32_t>>& edges,
                                             int l);

struct TrajectoryScore {
    double s = 0.0;      // |T| * l_bar * c
    double l_bar = 0.0;  // mean points per trajectory
    double c = 0.0;      // distinct covered frames / total frames
};

TrajectoryScore score_trajectories(const std::vector<Trajectory>& trajs, int total_frames);

struct MiningResult {
    std::vector<Trajectory> trajectories;
    MiningParams params;
    TrajectoryScore score;
    int trials = 0;
};

// N independent trials, each sampling (d, dt, l) uniformly from the bounds
// (dt and l rounded to the nearest integer); the highest score wins, earliest
// trial on ties. Trial streams derive from (seed, index).
MiningResult monte_carlo_mine(const std::vector<DetectionPoint>& points,
                              const MiningBounds& bounds, int total_frames,
                              uint64_t seed);

void save_trajectories_jsonl(const std::string& path, const MiningResult& result);
void save_mining_report(const std::string& path, const MiningResult& result);

}  // namespace tps
