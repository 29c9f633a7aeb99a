#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "banktweak/feature.hpp"
#include "banktweak/kalman.hpp"

namespace banktweak {

enum class BankAggregation { kMean, kMin };
enum class MatchProfile { kCascade, kGlobal };
enum class TrackStatus { kTentative, kConfirmed, kDeleted };
enum class MatchStage { kFeature, kIou };

// Mahalanobis gate scale; "max" disables gating entirely.
struct MahaMultiplier {
    double value = 1.0;
    bool is_max = false;

    static MahaMultiplier max() { return MahaMultiplier{0.0, true}; }
    static MahaMultiplier parse(const std::string& text);
    std::string str() const;
};

struct AssociationConfig {
    double lambda_app = 0.2;   // cosine-cost threshold for the feature stage
    double lambda_iou = 0.7;   // threshold on 1 - IoU for the fallback stage
    MahaMultiplier maha;
    BankAggregation aggregation = BankAggregation::kMin;
    MatchProfile profile = MatchProfile::kGlobal;
    int n_bank = 4;
    int confirm_hits = 1;
    int max_misses = 30;
    bool tentative_in_feature_stage = false;

    void validate() const;
};

struct Track {
    int id = 0;
    KalmanState kstate;
    FeatureBank bank;
    int hits = 0;
    int misses = 0;
    TrackStatus status = TrackStatus::kTentative;

    explicit Track(int bank_capacity) : bank(bank_capacity) {}
};

struct Match {
    int track_id = 0;
    int detection_index = 0;
    MatchStage stage = MatchStage::kFeature;
};

// Disjoint, exhaustive partition of tracks and detections for one frame.
struct MatchResult {
    std::vector<Match> matches;
    std::vector<int> unmatched_tracks;      // track ids
    std::vector<int> unmatched_detections;  // detection indices
};

// True iff d2 passes the chi-square gate scaled by the multiplier.
bool gate_pass(double d2, const AssociationConfig& cfg);

// Aggregated cosine distance from the track's bank to the detection
// feature; mean or min per config. Throws on an empty bank.
double feature_cost(const Track& track, const Detection& det, const AssociationConfig& cfg);

// Two-stage association for one frame: feature matching over gated,
// bank-eligible pairs first, then IoU fallback for the remainder.
// Tracks must already hold predicted states for this frame.
MatchResult associate_frame(const std::vector<Track>& tracks,
                            const std::vector<Detection>& detections,
                            const AssociationConfig& cfg, const KalmanFilter& filter);

}  // namespace banktweak
