#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "banktweak/pgd.hpp"
#include "banktweak/sim.hpp"

namespace banktweak {

// Contiguous frame window under attack: [start, start + length).
struct AttackWindow {
    int start = 15;
    int length = 5;
    bool contains(int frame) const { return frame >= start && frame < start + length; }
    int end() const { return start + length; }
};

// A five-frame feature-bank poisoning plan against one track pair.
struct AttackPlan {
    static constexpr int kSpan = 5;
    int object_a = 0;     // ground-truth id of the first target
    int object_b = 1;     // ground-truth id of the second target
    int start_frame = 15; // first perturbed frame; the pre-attack frame is start_frame - 1
};

// The eight forged features of the schedule, in production order.
// Slots 0..1 are the frame-1 dummies, 2..5 the groundwork forges,
// 6..7 the switch forges.
struct LedgerRecord {
    int slot = 0;
    int frame = 0;
    char source = 'A';             // which object's crop was perturbed
    LossKind loss = LossKind::kSimilar;
    std::string target_ref;        // "clean:A", "clean:B" or "ledger:<slot>"
    double achieved_distance = 0.0;
    bool converged = false;
    Feature feature;
};

struct FrameTarget {
    char object = 'A';
    int slot = 0;
    TargetSpec spec;
    std::string target_ref;
};

// Targets for schedule frame k in 1..5, resolved against the clean pair
// features and the ledger entries produced at earlier frames. Throws if a
// required ledger entry is missing, naming the frame that needs it.
std::vector<FrameTarget> schedule_for_frame(int k, const Feature& clean_a, const Feature& clean_b,
                                            const std::vector<std::optional<Feature>>& ledger);

struct BankTweakOptions {
    Budget budget;
    double lambda_app = 0.2;
    bool step2 = true;  // false: groundwork frames only, switch frames stay clean
};

struct AttackOutcome {
    AttackPlan plan;
    std::vector<LedgerRecord> ledger;
    std::vector<ForgeResult> forges;  // aligned with ledger; keeps patches for auditing
    bool all_converged = true;

    void save(const std::filesystem::path& path) const;
};

// Runs the five-frame schedule over a clean rendered stream, substituting
// forged features into the pair's detections. Boxes, counts and every
// other detection are untouched. Throws if a pair object is missing from
// any frame of the window (occlusion is outside the attack's contract).
DetectionStream run_banktweak(const std::vector<RenderedFrame>& clean_frames,
                              const Extractor& extractor, const AttackPlan& plan,
                              const BankTweakOptions& options, AttackOutcome* outcome = nullptr);

// Independent plans in one pass; pairs must be disjoint.
DetectionStream run_banktweak_multi(const std::vector<RenderedFrame>& clean_frames,
                                    const Extractor& extractor,
                                    const std::vector<AttackPlan>& plans,
                                    const BankTweakOptions& options,
                                    std::vector<AttackOutcome>* outcomes = nullptr);

// Detection-stream baselines.

// Deletes every detection inside the window.
DetectionStream run_fn_attack(const DetectionStream& clean, const AttackWindow& window);

// Adds k spurious detections with random features near each real one.
DetectionStream run_fp_attack(const DetectionStream& clean, const AttackWindow& window, int k,
                              std::uint64_t seed);

struct FfOptions {
    double walk_rate = 0.22;  // decoy drift per frame, in box widths
};

// Replaces each real detection in the window with four false alarms that
// carry its appearance feature, arranged around a decoy center that
// drifts away from the true position frame by frame.
DetectionStream run_ff_attack(const DetectionStream& clean, const AttackWindow& window,
                              const FfOptions& options = {});

}  // namespace banktweak
