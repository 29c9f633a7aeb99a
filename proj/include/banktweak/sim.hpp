#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "banktweak/extractor.hpp"
#include "banktweak/feature.hpp"

namespace banktweak {

struct ScenarioConfig {
    int n_objects = 3;
    int n_frames = 30;
    double scene_w = 1000.0;
    double scene_h = 1000.0;
    double box_min = 20.0;
    double box_max = 60.0;
    double speed_min = 3.0;
    double speed_max = 8.0;
    double sigma_v = 0.0;   // per-frame velocity jitter
    double sigma_p = 0.0;   // patch pixel noise
    double sigma_b = 0.0;   // box jitter
    double p_miss = 0.0;    // independent per-detection drop probability
    std::uint64_t seed = 1;
    std::string preset;     // "" or "crossing"

    void validate() const;

    // Key-value text file, one "key = value" per line, '#' comments.
    static ScenarioConfig from_file(const std::filesystem::path& path);
};

struct GtObject {
    int id = 0;
    Patch latent_patch;
    std::vector<BBox> trajectory;  // one box per frame, inside scene bounds
};

struct Scenario {
    ScenarioConfig cfg;
    std::vector<GtObject> objects;
};

struct RenderedFrame {
    std::vector<Detection> detections;
    std::vector<Patch> patches;  // source crops, index-aligned with detections
};

using DetectionStream = std::vector<std::vector<Detection>>;
using GtStream = std::vector<std::vector<std::pair<int, BBox>>>;

// Deterministic scenario generation. Latent patches are resampled until
// all pairwise clean-feature cosine distances exceed 0.4; throws when the
// retry budget runs out.
Scenario generate(const ScenarioConfig& cfg, const Extractor& extractor);

// Pure function of (scenario, extractor, t): visible objects become
// detections with the configured box jitter, patch noise and drop rate.
RenderedFrame render_frame(const Scenario& scenario, const Extractor& extractor, int t);

// All frames; parallel across frames, bitwise identical to a serial loop.
std::vector<RenderedFrame> render_stream(const Scenario& scenario, const Extractor& extractor);

DetectionStream detections_only(const std::vector<RenderedFrame>& frames);
GtStream gt_stream(const Scenario& scenario);

// One JSON record per detection: frame, source_id, box, feature.
void export_detection_log(const DetectionStream& stream, const std::filesystem::path& path);

}  // namespace banktweak
