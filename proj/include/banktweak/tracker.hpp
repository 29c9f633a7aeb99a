#pragma once

#include <vector>

#include "banktweak/association.hpp"

namespace banktweak {

struct TrackOutput {
    int id = 0;
    BBox bbox;
};

// Per-frame tracking-by-detection loop: predict, associate, update
// lifecycle. One instance per scenario run; no shared mutable state.
class Tracker {
public:
    explicit Tracker(const AssociationConfig& cfg,
                     const KalmanFilter& filter = KalmanFilter());

    // Advances one frame and returns the confirmed tracks updated in it.
    std::vector<TrackOutput> step(const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const AssociationConfig& config() const { return cfg_; }

private:
    AssociationConfig cfg_;
    KalmanFilter filter_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
};

}  // namespace banktweak
