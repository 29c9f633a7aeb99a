#include "banktweak/tracker.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace banktweak {

Tracker::Tracker(const AssociationConfig& cfg, const KalmanFilter& filter)
    : cfg_(cfg), filter_(filter) {
    cfg_.validate();
}

std::vector<TrackOutput> Tracker::step(const std::vector<Detection>& detections) {
    for (Track& t : tracks_) t.kstate = filter_.predict(t.kstate);

    const MatchResult assoc = associate_frame(tracks_, detections, cfg_, filter_);

    std::unordered_map<int, size_t> by_id;
    for (size_t i = 0; i < tracks_.size(); ++i) by_id[tracks_[i].id] = i;

    std::unordered_set<int> matched_ids;
    for (const Match& m : assoc.matches) {
        Track& t = tracks_[by_id.at(m.track_id)];
        const Detection& d = detections[m.detection_index];
        t.kstate = filter_.update(t.kstate, d.bbox);
        t.bank.push(d.feature);
        t.hits += 1;
        t.misses = 0;
        if (t.status == TrackStatus::kTentative && t.hits >= cfg_.confirm_hits)
            t.status = TrackStatus::kConfirmed;
        matched_ids.insert(m.track_id);
    }

    for (Track& t : tracks_) {
        if (matched_ids.count(t.id)) continue;
        t.misses += 1;
        t.hits = 0;
        if (t.misses > cfg_.max_misses) t.status = TrackStatus::kDeleted;
    }

    for (int j : assoc.unmatched_detections) {
        const Detection& d = detections[j];
        Track t(cfg_.n_bank);
        t.id = next_id_++;
        t.kstate = filter_.initiate(d.bbox);
        t.bank.push(d.feature);
        t.hits = 1;
        t.status = cfg_.confirm_hits <= 1 ? TrackStatus::kConfirmed : TrackStatus::kTentative;
        tracks_.push_back(std::move(t));
    }

    tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                                 [](const Track& t) { return t.status == TrackStatus::kDeleted; }),
                  tracks_.end());

    std::vector<TrackOutput> outputs;
    for (const Track& t : tracks_) {
        const bool updated_now = matched_ids.count(t.id) || t.hits == 1;
        if (t.status == TrackStatus::kConfirmed && t.misses == 0 && updated_now)
            outputs.push_back(TrackOutput{t.id, KalmanFilter::state_box(t.kstate)});
    }
    return outputs;
}

}  // namespace banktweak
