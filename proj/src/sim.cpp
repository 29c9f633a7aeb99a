#include "banktweak/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "banktweak/rng.hpp"

namespace banktweak {

namespace {

constexpr std::uint64_t kTagPatch = 0x5041ull;
constexpr std::uint64_t kTagMotion = 0x4d4full;
constexpr std::uint64_t kTagRender = 0x5245ull;

// Advances position with reflecting boundaries for the box center, keeping
// the whole box inside the scene.
void reflect(double& pos, double& vel, double half, double limit) {
    pos += vel;
    const double lo = half;
    const double hi = limit - half;
    while (pos < lo || pos > hi) {
        if (pos < lo) {
            pos = 2.0 * lo - pos;
            vel = -vel;
        }
        if (pos > hi) {
            pos = 2.0 * hi - pos;
            vel = -vel;
        }
    }
}

std::vector<BBox> roll_trajectory(const ScenarioConfig& cfg, Rng& rng, double w, double h,
                                  double cx, double cy, double vx, double vy) {
    std::vector<BBox> traj;
    traj.reserve(cfg.n_frames);
    for (int t = 0; t < cfg.n_frames; ++t) {
        traj.push_back(BBox{cx, cy, w, h});
        if (cfg.sigma_v > 0.0) {
            vx += rng.normal(0.0, cfg.sigma_v);
            vy += rng.normal(0.0, cfg.sigma_v);
        }
        reflect(cx, vx, 0.5 * w, cfg.scene_w);
        reflect(cy, vy, 0.5 * h, cfg.scene_h);
    }
    return traj;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_objects < 2)
        throw std::invalid_argument("scenario: n_objects must be >= 2 for attack scenarios");
    if (n_frames < 1) throw std::invalid_argument("scenario: n_frames must be >= 1");
    if (scene_w <= 0 || scene_h <= 0) throw std::invalid_argument("scenario: scene must be positive");
    if (!(box_min > 0 && box_max >= box_min))
        throw std::invalid_argument("scenario: invalid box size range");
    if (box_max >= std::min(scene_w, scene_h) / 2)
        throw std::invalid_argument("scenario: boxes too large for the scene");
    if (speed_min < 0 || speed_max < speed_min)
        throw std::invalid_argument("scenario: invalid speed range");
    if (sigma_v < 0 || sigma_p < 0 || sigma_b < 0)
        throw std::invalid_argument("scenario: noise sigmas must be >= 0");
    if (!(p_miss >= 0.0 && p_miss < 1.0))
        throw std::invalid_argument("scenario: p_miss must lie in [0, 1)");
    if (!preset.empty() && preset != "crossing")
        throw std::invalid_argument("scenario: unknown preset '" + preset + "'");
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario config: cannot read " + path.string());
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw std::runtime_error("scenario config: expected key = value at line " +
                                     std::to_string(lineno));
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "n_objects") cfg.n_objects = std::stoi(value);
            else if (key == "n_frames") cfg.n_frames = std::stoi(value);
            else if (key == "scene_w") cfg.scene_w = std::stod(value);
            else if (key == "scene_h") cfg.scene_h = std::stod(value);
            else if (key == "box_min") cfg.box_min = std::stod(value);
            else if (key == "box_max") cfg.box_max = std::stod(value);
            else if (key == "speed_min") cfg.speed_min = std::stod(value);
            else if (key == "speed_max") cfg.speed_max = std::stod(value);
            else if (key == "sigma_v") cfg.sigma_v = std::stod(value);
            else if (key == "sigma_p") cfg.sigma_p = std::stod(value);
            else if (key == "sigma_b") cfg.sigma_b = std::stod(value);
            else if (key == "p_miss") cfg.p_miss = std::stod(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "preset") cfg.preset = value;
            else throw std::runtime_error("scenario config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("scenario config: bad value for '" + key + "' at line " +
                                     std::to_string(lineno));
        }
    }
    cfg.validate();
    return cfg;
}

Scenario generate(const ScenarioConfig& cfg, const Extractor& extractor) {
    cfg.validate();
    Scenario scenario;
    scenario.cfg = cfg;

    // Latent patches, resampled as a set until pairwise clean features
    // are well separated.
    const int kMaxRounds = 40;
    std::vector<Patch> patches(cfg.n_objects);
    std::vector<Feature> features(cfg.n_objects);
    bool ok = false;
    for (int round = 0; round < kMaxRounds && !ok; ++round) {
        Rng rng(derive_seed(cfg.seed, {kTagPatch, static_cast<std::uint64_t>(round)}));
        for (int i = 0; i < cfg.n_objects; ++i) {
            Patch p(extractor.patch_dim());
            for (int k = 0; k < p.size(); ++k) p(k) = rng.uniform();
            patches[i] = p;
            features[i] = extractor.extract(p);
        }
        ok = true;
        for (int i = 0; i < cfg.n_objects && ok; ++i)
            for (int j = i + 1; j < cfg.n_objects && ok; ++j)
                if (cosine_distance(features[i], features[j]) <= 0.4) ok = false;
    }
    if (!ok)
        throw std::runtime_error(
            "scenario: could not draw distinct latent patches; increase patch or feature dims");

    Rng motion(derive_seed(cfg.seed, {kTagMotion}));
    for (int i = 0; i < cfg.n_objects; ++i) {
        GtObject obj;
        obj.id = i;
        obj.latent_patch = patches[i];

        const double w = motion.uniform(cfg.box_min, cfg.box_max);
        const double h = motion.uniform(cfg.box_min, cfg.box_max);
        double cx = motion.uniform(0.5 * w, cfg.scene_w - 0.5 * w);
        double cy = motion.uniform(0.5 * h, cfg.scene_h - 0.5 * h);
        const double speed = motion.uniform(cfg.speed_min, cfg.speed_max);
        const double heading = motion.uniform(0.0, 2.0 * std::numbers::pi);
        double vx = speed * std::cos(heading);
        double vy = speed * std::sin(heading);

        if (cfg.preset == "crossing" && i < 2) {
            // Two objects aimed at the scene center so their boxes overlap
            // mid-sequence.
            const double mid = 0.5 * cfg.n_frames;
            cx = i == 0 ? 0.25 * cfg.scene_w : 0.75 * cfg.scene_w;
            cy = 0.5 * cfg.scene_h + (i == 0 ? -0.5 : 0.5) * h;
            vx = (0.5 * cfg.scene_w - cx) / mid;
            vy = 0.0;
        }

        obj.trajectory = roll_trajectory(cfg, motion, w, h, cx, cy, vx, vy);
        scenario.objects.push_back(std::move(obj));
    }
    return scenario;
}

RenderedFrame render_frame(const Scenario& scenario, const Extractor& extractor, int t) {
    const ScenarioConfig& cfg = scenario.cfg;
    if (t < 0 || t >= cfg.n_frames) throw std::out_of_range("render_frame: frame out of range");

    Rng rng(derive_seed(cfg.seed, {kTagRender, static_cast<std::uint64_t>(t)}));
    RenderedFrame frame;
    for (const GtObject& obj : scenario.objects) {
        const bool dropped = cfg.p_miss > 0.0 && rng.uniform() < cfg.p_miss;
        BBox box = obj.trajectory[t];
        if (cfg.sigma_b > 0.0) {
            box.cx += rng.normal(0.0, cfg.sigma_b);
            box.cy += rng.normal(0.0, cfg.sigma_b);
            box.w = std::max(1.0, box.w + rng.normal(0.0, cfg.sigma_b));
            box.h = std::max(1.0, box.h + rng.normal(0.0, cfg.sigma_b));
        }
        Patch patch = obj.latent_patch;
        if (cfg.sigma_p > 0.0) {
            for (int k = 0; k < patch.size(); ++k)
                patch(k) = std::clamp(patch(k) + rng.normal(0.0, cfg.sigma_p), 0.0, 1.0);
        }
        if (dropped) continue;

        Detection det;
        det.bbox = box;
        det.feature = extractor.extract(patch);
        det.confidence = 1.0;
        det.source_id = obj.id;
        frame.detections.push_back(std::move(det));
        frame.patches.push_back(std::move(patch));
    }
    return frame;
}

std::vector<RenderedFrame> render_stream(const Scenario& scenario, const Extractor& extractor) {
    std::vector<RenderedFrame> frames(scenario.cfg.n_frames);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < scenario.cfg.n_frames; ++t) frames[t] = render_frame(scenario, extractor, t);
    return frames;
}

DetectionStream detections_only(const std::vector<RenderedFrame>& frames) {
    DetectionStream stream;
    stream.reserve(frames.size());
    for (const RenderedFrame& f : frames) stream.push_back(f.detections);
    return stream;
}

GtStream gt_stream(const Scenario& scenario) {
    GtStream gt(scenario.cfg.n_frames);
    for (int t = 0; t < scenario.cfg.n_frames; ++t)
        for (const GtObject& obj : scenario.objects) gt[t].emplace_back(obj.id, obj.trajectory[t]);
    return gt;
}

void export_detection_log(const DetectionStream& stream, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("detection log: cannot write " + path.string());
    for (size_t t = 0; t < stream.size(); ++t) {
        for (const Detection& d : stream[t]) {
            nlohmann::json j;
            j["frame"] = t;
            j["source_id"] = d.source_id ? nlohmann::json(*d.source_id) : nlohmann::json();
            j["box"] = {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h};
            std::vector<double> feat(d.feature.v.data(), d.feature.v.data() + d.feature.v.size());
            j["feature"] = feat;
            out << j.dump() << "\n";
        }
    }
}

}  // namespace banktweak
