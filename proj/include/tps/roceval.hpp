#pragma once

#include <string>
#include <vector>

#include "tps/detect.hpp"
#include "tps/formats.hpp"

namespace tps {

struct GtRecord {
    int t = 0;
    double x = 0.0, y = 0.0;  // sub-pixel centroid; rounded half-up for matching
    double a = 0.0;           // injected peak intensity (metadata)
};

struct GroundTruth {
    int h = 0, w = 0, k = 0;
    std::vector<GtRecord> records;
};

struct ConfusionCounts {
    int64_t n_d = 0;  // detected targets
    int64_t n_t = 0;  // total targets
    int64_t n_f = 0;  // false-alarm pixels
    int64_t n_b = 0;  // background pixels, summed over frames
};

struct PdFa {
    double pd = 0.0, fa = 0.0;
    ConfusionCounts counts;
};

// A target counts detected when an above-tau pixel lies within Chebyshev
// `radius` of its rounded centroid in its frame; pixels match greedily by
// descending score, one target each. A false alarm is an above-tau pixel with
// no target centroid within `radius` in its frame. The background pixel count
// per frame is H*W minus that frame's target count.
PdFa pd_fa_at_tau(const Cube& cube, const GroundTruth& gt, double tau, int radius = 3);

struct RocCurves {
    std::vector<double> taus, pd, fa;
};

// Threshold grid must be ascending and span [0,1]; comparisons are inclusive.
RocCurves roc_curves(const Cube& cube, const GroundTruth& gt,
                     const std::vector<double>& grid, int radius = 3);

std::vector<double> uniform_grid(int points);  // [0,1] inclusive

struct AucSet {
    double df = 0.0;    // area under (pd over fa)
    double dtau = 0.0;  // area under (pd over tau)
    double ftau = 0.0;  // area under (fa over tau)
    double td = 0.0, bs = 0.0, td_bs = 0.0, odp = 0.0;
    double snpr = 0.0;
    bool snpr_finite = true;  // false when ftau == 0; snpr then meaningless
};

// Trapezoids on all three curves; the (pd, fa) pairs sort by fa with constant
// continuation to fa = 0 and fa = 1 before integrating.
AucSet auc_metrics(const RocCurves& curves);

// Discrete points as a {0,1} cube on the same evaluation path (score sweeps
// degenerate to a single plateau).
Cube render_points_cube(const std::vector<DetectionPoint>& points, int h, int w, int k);

GroundTruth load_gt_csv(const std::string& path, int h, int w, int k);
void save_gt_csv(const std::string& path, const GroundTruth& gt);

void save_roc_report(const std::string& path, const RocCurves& curves, const AucSet& aucs);

// Standalone polyline plot, no external assets.
void save_curve_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace tps
