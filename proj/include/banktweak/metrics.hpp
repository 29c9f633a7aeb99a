#pragma once

#include <set>
#include <vector>

#include "banktweak/geometry.hpp"
#include "banktweak/sim.hpp"

namespace banktweak {

// Per-frame (id, box) pairs of tracker output, aligned with the gt stream.
using PredStream = std::vector<std::vector<std::pair<int, BBox>>>;

struct EvalResult {
    double idf1 = 0.0;      // percentage
    int idsw = 0;
    double rho_det = 0.0;
    double rho_id = 0.0;
    int frames_scored = 0;
};

// Identity-F1 under the optimal one-to-one id mapping; boxes correspond
// when IoU >= 0.5. Excluded frames are ignored entirely.
double idf1(const GtStream& gt, const PredStream& pred, const std::set<int>& excluded_frames);

// Frames where a ground-truth object's matched id differs from its most
// recent previously matched id.
int id_switches(const GtStream& gt, const PredStream& pred, const std::set<int>& excluded_frames);

// Practicality ratios over the attack frames: detections per ground-truth
// object and distinct output ids per ground-truth object. Frames with no
// ground truth are skipped.
std::pair<double, double> rho_metrics(const GtStream& gt, const PredStream& pred,
                                      const DetectionStream& detections,
                                      const std::set<int>& attack_frames);

EvalResult evaluate_run(const GtStream& gt, const PredStream& pred,
                        const DetectionStream& detections, const std::set<int>& attack_frames);

}  // namespace banktweak
