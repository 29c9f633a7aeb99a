#include "banktweak/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "banktweak/assignment.hpp"

namespace banktweak {

namespace {

constexpr double kBoxMatchIou = 0.5;

std::vector<int> collect_ids(const std::vector<std::vector<std::pair<int, BBox>>>& stream,
                             const std::set<int>& excluded) {
    std::set<int> ids;
    for (size_t f = 0; f < stream.size(); ++f) {
        if (excluded.count(static_cast<int>(f))) continue;
        for (const auto& [id, box] : stream[f]) ids.insert(id);
    }
    return {ids.begin(), ids.end()};
}

}  // namespace

double idf1(const GtStream& gt, const PredStream& pred, const std::set<int>& excluded_frames) {
    if (gt.size() != pred.size())
        throw std::invalid_argument("idf1: streams must be frame-aligned");

    const std::vector<int> gt_ids = collect_ids(gt, excluded_frames);
    const std::vector<int> pred_ids = collect_ids(pred, excluded_frames);
    std::map<int, int> gt_index, pred_index;
    for (size_t i = 0; i < gt_ids.size(); ++i) gt_index[gt_ids[i]] = static_cast<int>(i);
    for (size_t i = 0; i < pred_ids.size(); ++i) pred_index[pred_ids[i]] = static_cast<int>(i);

    long total_gt = 0;
    long total_pred = 0;
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(gt_ids.size(), pred_ids.size());
    for (size_t f = 0; f < gt.size(); ++f) {
        if (excluded_frames.count(static_cast<int>(f))) continue;
        total_gt += static_cast<long>(gt[f].size());
        total_pred += static_cast<long>(pred[f].size());
        for (const auto& [gid, gbox] : gt[f])
            for (const auto& [pid, pbox] : pred[f])
                if (iou(gbox, pbox) >= kBoxMatchIou) overlap(gt_index[gid], pred_index[pid]) += 1.0;
    }

    if (total_gt == 0 && total_pred == 0) return 100.0;

    double idtp = 0.0;
    if (overlap.rows() > 0 && overlap.cols() > 0) {
        const auto mapping = hungarian_assign(-overlap);
        for (const auto& [r, c] : mapping) idtp += overlap(r, c);
    }
    const double idfp = static_cast<double>(total_pred) - idtp;
    const double idfn = static_cast<double>(total_gt) - idtp;
    return 100.0 * (2.0 * idtp) / (2.0 * idtp + idfp + idfn);
}

int id_switches(const GtStream& gt, const PredStream& pred, const std::set<int>& excluded_frames) {
    if (gt.size() != pred.size())
        throw std::invalid_argument("id_switches: streams must be frame-aligned");

    std::map<int, int> last_matched;  // gt id -> most recent matched pred id
    int switches = 0;

    for (size_t f = 0; f < gt.size(); ++f) {
        if (excluded_frames.count(static_cast<int>(f))) continue;
        const auto& gts = gt[f];
        const auto& preds = pred[f];

        std::vector<bool> gt_taken(gts.size(), false);
        std::vector<bool> pred_taken(preds.size(), false);
        std::vector<std::pair<int, int>> frame_matches;  // (gt idx, pred idx)

        // Carry over existing correspondences that still overlap.
        for (size_t i = 0; i < gts.size(); ++i) {
            const auto it = last_matched.find(gts[i].first);
            if (it == last_matched.end()) continue;
            for (size_t j = 0; j < preds.size(); ++j) {
                if (pred_taken[j] || preds[j].first != it->second) continue;
                if (iou(gts[i].second, preds[j].second) >= kBoxMatchIou) {
                    frame_matches.emplace_back(i, j);
                    gt_taken[i] = true;
                    pred_taken[j] = true;
                }
                break;
            }
        }

        // Assign the remainder by best overlap.
        std::vector<int> free_gt, free_pred;
        for (size_t i = 0; i < gts.size(); ++i)
            if (!gt_taken[i]) free_gt.push_back(static_cast<int>(i));
        for (size_t j = 0; j < preds.size(); ++j)
            if (!pred_taken[j]) free_pred.push_back(static_cast<int>(j));
        if (!free_gt.empty() && !free_pred.empty()) {
            Eigen::MatrixXd cost(free_gt.size(), free_pred.size());
            BoolMatrix feasible(free_gt.size(), free_pred.size());
            for (size_t i = 0; i < free_gt.size(); ++i)
                for (size_t j = 0; j < free_pred.size(); ++j) {
                    const double v = iou(gts[free_gt[i]].second, preds[free_pred[j]].second);
                    cost(i, j) = 1.0 - v;
                    feasible(i, j) = v >= kBoxMatchIou;
                }
            for (const auto& [r, c] : hungarian_assign(cost, feasible))
                frame_matches.emplace_back(free_gt[r], free_pred[c]);
        }

        for (const auto& [gi, pj] : frame_matches) {
            const int gt_id = gts[gi].first;
            const int pred_id = preds[pj].first;
            const auto it = last_matched.find(gt_id);
            if (it != last_matched.end() && it->second != pred_id) ++switches;
            last_matched[gt_id] = pred_id;
        }
    }
    return switches;
}

std::pair<double, double> rho_metrics(const GtStream& gt, const PredStream& pred,
                                      const DetectionStream& detections,
                                      const std::set<int>& attack_frames) {
    if (attack_frames.empty()) throw std::invalid_argument("rho_metrics: no attack frames");
    double det_sum = 0.0;
    double id_sum = 0.0;
    int counted = 0;
    for (int f : attack_frames) {
        if (f < 0 || f >= static_cast<int>(gt.size())) continue;
        const double gt_count = static_cast<double>(gt[f].size());
        if (gt_count == 0.0) continue;  // skipped, nothing to normalize by
        std::set<int> ids;
        for (const auto& [id, box] : pred[f]) ids.insert(id);
        det_sum += static_cast<double>(detections[f].size()) / gt_count;
        id_sum += static_cast<double>(ids.size()) / gt_count;
        ++counted;
    }
    if (counted == 0) return {0.0, 0.0};
    return {det_sum / counted, id_sum / counted};
}

EvalResult evaluate_run(const GtStream& gt, const PredStream& pred,
                        const DetectionStream& detections, const std::set<int>& attack_frames) {
    EvalResult r;
    r.idf1 = idf1(gt, pred, attack_frames);
    r.idsw = id_switches(gt, pred, attack_frames);
    const auto [rd, ri] = rho_metrics(gt, pred, detections, attack_frames);
    r.rho_det = rd;
    r.rho_id = ri;
    r.frames_scored = static_cast<int>(gt.size()) - static_cast<int>(attack_frames.size());
    return r;
}

}  // namespace banktweak
