#include "banktweak/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "banktweak/assignment.hpp"

namespace banktweak {

MahaMultiplier MahaMultiplier::parse(const std::string& text) {
    if (text == "max" || text == "Max" || text == "MAX") return MahaMultiplier::max();
    size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("maha multiplier: cannot parse '" + text + "'");
    if (!(v >= 1.0)) throw std::invalid_argument("maha multiplier: must be >= 1 or 'max'");
    return MahaMultiplier{v, false};
}

std::string MahaMultiplier::str() const {
    if (is_max) return "max";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

void AssociationConfig::validate() const {
    if (!(lambda_app > 0.0 && lambda_app < 2.0))
        throw std::invalid_argument("association: lambda_app must be in (0, 2)");
    if (!(lambda_iou > 0.0 && lambda_iou < 1.0))
        throw std::invalid_argument("association: lambda_iou must be in (0, 1)");
    if (!maha.is_max && !(maha.value >= 1.0))
        throw std::invalid_argument("association: maha multiplier must be >= 1 or max");
    if (n_bank <= 0) throw std::invalid_argument("association: n_bank must be positive");
    if (confirm_hits < 1) throw std::invalid_argument("association: confirm_hits must be >= 1");
    if (max_misses < 0) throw std::invalid_argument("association: max_misses must be >= 0");
}

bool gate_pass(double d2, const AssociationConfig& cfg) {
    if (cfg.maha.is_max) return true;
    return d2 <= kGateChi2Quantile95 * cfg.maha.value * cfg.maha.value;
}

double feature_cost(const Track& track, const Detection& det, const AssociationConfig& cfg) {
    if (track.bank.empty())
        throw std::logic_error("feature_cost: empty bank; track is IoU-stage only");
    return cfg.aggregation == BankAggregation::kMean ? track.bank.mean_distance(det.feature)
                                                     : track.bank.min_distance(det.feature);
}

namespace {

// Feature-stage assignment for one cascade group. A (track, detection)
// cell is admissible when the Mahalanobis gate passes and at least one
// bank entry lies within lambda_app of the detection feature; admissible
// cells are ranked by the aggregated bank cost.
void match_feature_group(const std::vector<Track>& tracks, const std::vector<int>& track_idx,
                         const std::vector<Detection>& detections, std::vector<int>& free_dets,
                         const AssociationConfig& cfg, const KalmanFilter& filter,
                         MatchResult& result, std::vector<int>& leftover_tracks) {
    if (track_idx.empty()) return;
    if (free_dets.empty()) {
        leftover_tracks.insert(leftover_tracks.end(), track_idx.begin(), track_idx.end());
        return;
    }

    const int nr = static_cast<int>(track_idx.size());
    const int nc = static_cast<int>(free_dets.size());
    Eigen::MatrixXd cost(nr, nc);
    BoolMatrix feasible(nr, nc);
    for (int i = 0; i < nr; ++i) {
        const Track& t = tracks[track_idx[i]];
        for (int j = 0; j < nc; ++j) {
            const Detection& d = detections[free_dets[j]];
            const double d2 = filter.mahalanobis_sq(t.kstate, d.bbox);
            const bool ok = gate_pass(d2, cfg) && t.bank.min_distance(d.feature) <= cfg.lambda_app;
            feasible(i, j) = ok;
            cost(i, j) = ok ? feature_cost(t, d, cfg) : 0.0;
        }
    }

    const auto pairs = hungarian_assign(cost, feasible);
    std::set<int> taken_rows, taken_cols;
    for (const auto& [r, c] : pairs) {
        result.matches.push_back(Match{tracks[track_idx[r]].id, free_dets[c], MatchStage::kFeature});
        taken_rows.insert(r);
        taken_cols.insert(c);
    }
    for (int i = 0; i < nr; ++i)
        if (!taken_rows.count(i)) leftover_tracks.push_back(track_idx[i]);
    std::vector<int> remaining;
    for (int j = 0; j < nc; ++j)
        if (!taken_cols.count(j)) remaining.push_back(free_dets[j]);
    free_dets = remaining;
}

}  // namespace

MatchResult associate_frame(const std::vector<Track>& tracks,
                            const std::vector<Detection>& detections,
                            const AssociationConfig& cfg, const KalmanFilter& filter) {
    cfg.validate();
    MatchResult result;

    std::vector<int> free_dets(detections.size());
    for (size_t j = 0; j < detections.size(); ++j) free_dets[j] = static_cast<int>(j);

    // Stage 1: feature matching over eligible tracks.
    std::vector<int> feature_tracks;
    std::vector<int> iou_only_tracks;
    for (size_t i = 0; i < tracks.size(); ++i) {
        const Track& t = tracks[i];
        const bool eligible = !t.bank.empty() &&
                              (t.status == TrackStatus::kConfirmed ||
                               (cfg.tentative_in_feature_stage && t.status == TrackStatus::kTentative));
        if (eligible)
            feature_tracks.push_back(static_cast<int>(i));
        else
            iou_only_tracks.push_back(static_cast<int>(i));
    }

    std::vector<int> leftover_tracks;
    if (cfg.profile == MatchProfile::kCascade) {
        // Most recently updated tracks match first.
        std::map<int, std::vector<int>> groups;
        for (int i : feature_tracks) groups[tracks[i].misses].push_back(i);
        for (auto& [misses, group] : groups)
            match_feature_group(tracks, group, detections, free_dets, cfg, filter, result,
                                leftover_tracks);
    } else {
        match_feature_group(tracks, feature_tracks, detections, free_dets, cfg, filter, result,
                            leftover_tracks);
    }

    // Stage 2: IoU fallback for everything still unmatched.
    std::vector<int> iou_tracks = leftover_tracks;
    iou_tracks.insert(iou_tracks.end(), iou_only_tracks.begin(), iou_only_tracks.end());
    std::sort(iou_tracks.begin(), iou_tracks.end());

    if (!iou_tracks.empty() && !free_dets.empty()) {
        const int nr = static_cast<int>(iou_tracks.size());
        const int nc = static_cast<int>(free_dets.size());
        Eigen::MatrixXd cost(nr, nc);
        BoolMatrix feasible(nr, nc);
        for (int i = 0; i < nr; ++i) {
            const BBox predicted = KalmanFilter::state_box(tracks[iou_tracks[i]].kstate);
            for (int j = 0; j < nc; ++j) {
                const double c = 1.0 - iou(predicted, detections[free_dets[j]].bbox);
                cost(i, j) = c;
                feasible(i, j) = c <= cfg.lambda_iou;
            }
        }
        const auto pairs = hungarian_assign(cost, feasible);
        std::set<int> taken_rows, taken_cols;
        for (const auto& [r, c] : pairs) {
            result.matches.push_back(Match{tracks[iou_tracks[r]].id, free_dets[c], MatchStage::kIou});
            taken_rows.insert(r);
            taken_cols.insert(c);
        }
        std::vector<int> final_tracks;
        for (int i = 0; i < nr; ++i)
            if (!taken_rows.count(i)) final_tracks.push_back(iou_tracks[i]);
        iou_tracks = final_tracks;
        std::vector<int> remaining;
        for (int j = 0; j < nc; ++j)
            if (!taken_cols.count(j)) remaining.push_back(free_dets[j]);
        free_dets = remaining;
    }

    for (int i : iou_tracks) result.unmatched_tracks.push_back(tracks[i].id);
    result.unmatched_detections = free_dets;
    return result;
}

}  // namespace banktweak
