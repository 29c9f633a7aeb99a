#include "banktweak/attack.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "banktweak/rng.hpp"

namespace banktweak {

namespace {

struct SlotDef {
    int slot;
    int frame_offset;  // 1..5
    char source;
    LossKind loss;
    int ledger_ref;    // -1: clean feature of ref_object
    char ref_object;
};

// The full schedule. Frame 1 repels both crops from their own clean
// features (the dummies). Frames 2-3 plant the cross forges next to the
// clean features and refresh the dummies from the same source. Frames 4-5
// forge one crop per frame toward the opposite bank's freshest entry and
// leave the other crop clean.
constexpr SlotDef kSchedule[] = {
    {0, 1, 'A', LossKind::kDissimilar, -1, 'A'},
    {1, 1, 'B', LossKind::kDissimilar, -1, 'B'},
    {2, 2, 'A', LossKind::kSimilar, -1, 'B'},
    {3, 2, 'B', LossKind::kSimilar, 1, ' '},
    {4, 3, 'A', LossKind::kSimilar, 0, ' '},
    {5, 3, 'B', LossKind::kSimilar, -1, 'A'},
    {6, 4, 'A', LossKind::kSimilar, 3, ' '},
    {7, 5, 'B', LossKind::kSimilar, 4, ' '},
};

int detection_index_of(const std::vector<Detection>& dets, int source_id) {
    for (size_t i = 0; i < dets.size(); ++i)
        if (dets[i].source_id && *dets[i].source_id == source_id) return static_cast<int>(i);
    return -1;
}

}  // namespace

std::vector<FrameTarget> schedule_for_frame(int k, const Feature& clean_a, const Feature& clean_b,
                                            const std::vector<std::optional<Feature>>& ledger) {
    if (k < 1 || k > AttackPlan::kSpan)
        throw std::invalid_argument("schedule: frame index must lie in 1..5");
    std::vector<FrameTarget> targets;
    for (const SlotDef& def : kSchedule) {
        if (def.frame_offset != k) continue;
        FrameTarget t;
        t.object = def.source;
        t.slot = def.slot;
        t.spec.loss = def.loss;
        if (def.ledger_ref < 0) {
            t.spec.target = def.ref_object == 'A' ? clean_a : clean_b;
            t.target_ref = std::string("clean:") + def.ref_object;
        } else {
            if (static_cast<size_t>(def.ledger_ref) >= ledger.size() ||
                !ledger[def.ledger_ref].has_value())
                throw std::runtime_error("schedule: frame " + std::to_string(k) +
                                         " needs ledger slot " + std::to_string(def.ledger_ref) +
                                         " which was never produced");
            t.spec.target = *ledger[def.ledger_ref];
            t.target_ref = "ledger:" + std::to_string(def.ledger_ref);
        }
        targets.push_back(std::move(t));
    }
    return targets;
}

void AttackOutcome::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["pair"] = {plan.object_a, plan.object_b};
    j["start_frame"] = plan.start_frame;
    j["all_converged"] = all_converged;
    nlohmann::json entries = nlohmann::json::array();
    for (const LedgerRecord& r : ledger) {
        nlohmann::json e;
        e["slot"] = r.slot;
        e["frame"] = r.frame;
        e["source"] = std::string(1, r.source);
        e["loss"] = r.loss == LossKind::kSimilar ? "similar" : "dissimilar";
        e["target_ref"] = r.target_ref;
        e["achieved_distance"] = r.achieved_distance;
        e["converged"] = r.converged;
        e["feature"] = std::vector<double>(r.feature.v.data(), r.feature.v.data() + r.feature.v.size());
        entries.push_back(std::move(e));
    }
    j["ledger"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("attack outcome: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

DetectionStream run_banktweak(const std::vector<RenderedFrame>& clean_frames,
                              const Extractor& extractor, const AttackPlan& plan,
                              const BankTweakOptions& options, AttackOutcome* outcome) {
    const int n_frames = static_cast<int>(clean_frames.size());
    const int t0 = plan.start_frame - 1;  // pre-attack reference frame
    if (t0 < 0 || plan.start_frame + AttackPlan::kSpan > n_frames)
        throw std::invalid_argument("banktweak: attack window does not fit the stream");
    if (plan.object_a == plan.object_b)
        throw std::invalid_argument("banktweak: pair must name two distinct objects");

    // The pair must be visible across the reference frame and the window.
    for (int f = t0; f < plan.start_frame + AttackPlan::kSpan; ++f) {
        for (int id : {plan.object_a, plan.object_b}) {
            if (detection_index_of(clean_frames[f].detections, id) < 0)
                throw std::runtime_error("banktweak: object " + std::to_string(id) +
                                         " not visible at frame " + std::to_string(f) +
                                         "; run aborted");
        }
    }

    const int ref_a = detection_index_of(clean_frames[t0].detections, plan.object_a);
    const int ref_b = detection_index_of(clean_frames[t0].detections, plan.object_b);
    const Feature clean_a = clean_frames[t0].detections[ref_a].feature;
    const Feature clean_b = clean_frames[t0].detections[ref_b].feature;

    DetectionStream attacked = detections_only(clean_frames);

    AttackOutcome local;
    local.plan = plan;
    std::vector<std::optional<Feature>> ledger(8);

    const int last_forged_frame = options.step2 ? AttackPlan::kSpan : 3;
    for (int k = 1; k <= last_forged_frame; ++k) {
        const int frame = t0 + k;
        const auto targets = schedule_for_frame(k, clean_a, clean_b, ledger);
        std::vector<ForgeResult> forged(targets.size());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(targets.size()); ++i) {
            const FrameTarget& ft = targets[i];
            const int obj = ft.object == 'A' ? plan.object_a : plan.object_b;
            const int di = detection_index_of(clean_frames[frame].detections, obj);
            forged[i] = solve_perturbation(extractor, clean_frames[frame].patches[di], ft.spec,
                                           options.budget, options.lambda_app);
        }
        for (size_t i = 0; i < targets.size(); ++i) {
            const FrameTarget& ft = targets[i];
            const int obj = ft.object == 'A' ? plan.object_a : plan.object_b;
            const int di = detection_index_of(clean_frames[frame].detections, obj);
            attacked[frame][di].feature = forged[i].feature;

            ledger[ft.slot] = forged[i].feature;
            LedgerRecord rec;
            rec.slot = ft.slot;
            rec.frame = frame;
            rec.source = ft.object;
            rec.loss = ft.spec.loss;
            rec.target_ref = ft.target_ref;
            rec.achieved_distance = forged[i].achieved_distance;
            rec.converged = forged[i].converged;
            rec.feature = forged[i].feature;
            local.all_converged = local.all_converged && forged[i].converged;
            local.ledger.push_back(std::move(rec));
            local.forges.push_back(std::move(forged[i]));
        }
    }

    if (outcome) *outcome = std::move(local);
    return attacked;
}

DetectionStream run_banktweak_multi(const std::vector<RenderedFrame>& clean_frames,
                                    const Extractor& extractor,
                                    const std::vector<AttackPlan>& plans,
                                    const BankTweakOptions& options,
                                    std::vector<AttackOutcome>* outcomes) {
    std::set<int> seen;
    for (const AttackPlan& p : plans) {
        if (!seen.insert(p.object_a).second || !seen.insert(p.object_b).second)
            throw std::invalid_argument("banktweak: overlapping pairs are rejected");
    }
    DetectionStream attacked = detections_only(clean_frames);
    if (outcomes) outcomes->clear();
    for (const AttackPlan& p : plans) {
        AttackOutcome out;
        const DetectionStream one = run_banktweak(clean_frames, extractor, p, options, &out);
        for (int f = p.start_frame; f < p.start_frame + AttackPlan::kSpan; ++f) {
            for (size_t i = 0; i < one[f].size(); ++i) {
                const auto& src = one[f][i].source_id;
                if (src && (*src == p.object_a || *src == p.object_b))
                    attacked[f][i].feature = one[f][i].feature;
            }
        }
        if (outcomes) outcomes->push_back(std::move(out));
    }
    return attacked;
}

DetectionStream run_fn_attack(const DetectionStream& clean, const AttackWindow& window) {
    DetectionStream out = clean;
    for (int f = 0; f < static_cast<int>(out.size()); ++f)
        if (window.contains(f)) out[f].clear();
    return out;
}

DetectionStream run_fp_attack(const DetectionStream& clean, const AttackWindow& window, int k,
                              std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("fp attack: k must be >= 0");
    DetectionStream out = clean;
    for (int f = 0; f < static_cast<int>(out.size()); ++f) {
        if (!window.contains(f)) continue;
        const size_t n_real = clean[f].size();
        for (size_t i = 0; i < n_real; ++i) {
            const Detection& base = clean[f][i];
            for (int s = 0; s < k; ++s) {
                Rng rng(derive_seed(seed, {0x4650ull, static_cast<std::uint64_t>(f),
                                           static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(s)}));
                Detection fake;
                fake.bbox = base.bbox;
                fake.bbox.cx += rng.normal(0.0, 0.4 * base.bbox.w);
                fake.bbox.cy += rng.normal(0.0, 0.4 * base.bbox.h);
                Vec raw(base.feature.dim());
                for (int d = 0; d < raw.size(); ++d) raw(d) = rng.normal();
                fake.feature = Feature::normalized(raw);
                fake.confidence = 1.0;
                fake.source_id = std::nullopt;
                out[f].push_back(std::move(fake));
            }
        }
    }
    return out;
}

DetectionStream run_ff_attack(const DetectionStream& clean, const AttackWindow& window,
                              const FfOptions& options) {
    DetectionStream out(clean.size());
    for (int f = 0; f < static_cast<int>(clean.size()); ++f) {
        if (!window.contains(f)) {
            out[f] = clean[f];
            continue;
        }
        const int step = f - window.start + 1;
        for (const Detection& d : clean[f]) {
            // Decoy center drifts along +x; the trailing alarm comes first
            // so deterministic tie-breaking keeps the victim on it.
            const double drift = options.walk_rate * d.bbox.w * step;
            const double offsets[4][2] = {{drift - 0.5 * d.bbox.w, 0.0},
                                          {drift + 0.5 * d.bbox.w, 0.0},
                                          {drift, -0.5 * d.bbox.h},
                                          {drift, +0.5 * d.bbox.h}};
            for (const auto& off : offsets) {
                Detection fake = d;
                fake.bbox.cx += off[0];
                fake.bbox.cy += off[1];
                fake.source_id = std::nullopt;
                out[f].push_back(std::move(fake));
            }
        }
    }
    return out;
}

}  // namespace banktweak
