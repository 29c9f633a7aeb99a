#include "banktweak/extractor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "banktweak/rng.hpp"

namespace banktweak {

void ExtractorConfig::validate() const {
    if (patch_dim <= 0 || hidden_dim <= 0 || feature_dim <= 0)
        throw std::invalid_argument("extractor: dimensions must be positive");
    if (!(input_gain > 0.0)) throw std::invalid_argument("extractor: input_gain must be positive");
}

void validate_patch(const Patch& p) {
    if (!p.allFinite()) throw std::invalid_argument("patch: non-finite components");
    if ((p.array() < -1e-12).any() || (p.array() > 1.0 + 1e-12).any())
        throw std::invalid_argument("patch: components must lie in [0, 1]");
}

Extractor::Extractor(const ExtractorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int P = cfg_.patch_dim;
    const int H = cfg_.hidden_dim;
    const int D = cfg_.feature_dim;
    in_scale_ = cfg_.input_gain / std::sqrt(static_cast<double>(P));
    out_scale_ = 1.0 / std::sqrt(static_cast<double>(H));

    // Fixed draw order: w1 row by row, then the phases, then w2 row by row.
    Rng rng(derive_seed(cfg_.seed, {0x45585452ull}));
    w1_.resize(H, P);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < P; ++j) w1_(i, j) = rng.normal();
    b1_.resize(H);
    for (int i = 0; i < H; ++i) b1_(i) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w2_.resize(D, H);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < H; ++j) w2_(i, j) = rng.normal();

    w1t_ = w1_.transpose();
    w2t_ = w2_.transpose();
}

template <bool Parallel>
void Extractor::forward_impl(const Patch& p, Workspace& ws) const {
    const int P = cfg_.patch_dim;
    const int H = cfg_.hidden_dim;
    const int D = cfg_.feature_dim;
    if (p.size() != P) throw std::invalid_argument("extractor: patch dimension mismatch");

    const Eigen::VectorXd centered = p.array() - 0.5;
    ws.hidden.resize(H);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < H; ++i)
        ws.hidden(i) = std::tanh(in_scale_ * w1_.row(i).dot(centered) + b1_(i));

    ws.raw.resize(D);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < D; ++i) ws.raw(i) = out_scale_ * w2_.row(i).dot(ws.hidden);

    ws.raw_norm = ws.raw.norm();
    if (ws.raw_norm < 1e-12)
        throw std::runtime_error("extractor: degenerate zero embedding before normalization");
    ws.feature = Feature{ws.raw / ws.raw_norm};
}

template <bool Parallel>
Eigen::VectorXd Extractor::backward_impl(const Workspace& ws,
                                         const Eigen::VectorXd& upstream) const {
    const int P = cfg_.patch_dim;
    const int H = cfg_.hidden_dim;
    const int D = cfg_.feature_dim;
    if (upstream.size() != D) throw std::invalid_argument("extractor: upstream dimension mismatch");

    // Through the normalization: d(upstream . f)/d(raw).
    const Eigen::VectorXd& f = ws.feature.v;
    const Eigen::VectorXd d_raw = (upstream - f * f.dot(upstream)) / ws.raw_norm;

    Eigen::VectorXd d_hidden(H);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int j = 0; j < H; ++j)
        d_hidden(j) = out_scale_ * w2t_.row(j).dot(d_raw) * (1.0 - ws.hidden(j) * ws.hidden(j));

    Eigen::VectorXd d_patch(P);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int j = 0; j < P; ++j) d_patch(j) = in_scale_ * w1t_.row(j).dot(d_hidden);
    return d_patch;
}

Feature Extractor::extract(const Patch& p) const {
    Workspace ws;
    forward_impl<true>(p, ws);
    return ws.feature;
}

Feature Extractor::extract_serial(const Patch& p) const {
    Workspace ws;
    forward_impl<false>(p, ws);
    return ws.feature;
}

void Extractor::forward(const Patch& p, Workspace& ws) const { forward_impl<true>(p, ws); }
void Extractor::forward_serial(const Patch& p, Workspace& ws) const { forward_impl<false>(p, ws); }

Eigen::VectorXd Extractor::grad_wrt_patch(const Patch& p, const Eigen::VectorXd& upstream) const {
    Workspace ws;
    forward_impl<true>(p, ws);
    return backward_impl<true>(ws, upstream);
}

Eigen::VectorXd Extractor::grad_from_workspace(const Workspace& ws,
                                               const Eigen::VectorXd& upstream) const {
    return backward_impl<true>(ws, upstream);
}

Eigen::VectorXd Extractor::grad_from_workspace_serial(const Workspace& ws,
                                                      const Eigen::VectorXd& upstream) const {
    return backward_impl<false>(ws, upstream);
}

std::vector<Feature> Extractor::extract_batch(const std::vector<Patch>& patches) const {
    std::vector<Feature> out(patches.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(patches.size()); ++i)
        out[i] = extract_serial(patches[i]);
    return out;
}

std::uint64_t Extractor::weight_checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](double x) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        h ^= bits;
        h *= 0x100000001b3ull;
    };
    for (int i = 0; i < w1_.rows(); ++i)
        for (int j = 0; j < w1_.cols(); ++j) mix(w1_(i, j));
    for (int i = 0; i < b1_.size(); ++i) mix(b1_(i));
    for (int i = 0; i < w2_.rows(); ++i)
        for (int j = 0; j < w2_.cols(); ++j) mix(w2_(i, j));
    return h;
}

void Extractor::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["seed"] = cfg_.seed;
    j["patch_dim"] = cfg_.patch_dim;
    j["hidden_dim"] = cfg_.hidden_dim;
    j["feature_dim"] = cfg_.feature_dim;
    j["input_gain"] = cfg_.input_gain;
    j["weight_checksum"] = weight_checksum();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("extractor: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Extractor Extractor::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("extractor: cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    ExtractorConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.patch_dim = j.at("patch_dim").get<int>();
    cfg.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.feature_dim = j.at("feature_dim").get<int>();
    cfg.input_gain = j.at("input_gain").get<double>();
    Extractor e(cfg);
    if (j.contains("weight_checksum") &&
        j.at("weight_checksum").get<std::uint64_t>() != e.weight_checksum())
        throw std::runtime_error("extractor: weight checksum mismatch on load");
    return e;
}

}  // namespace banktweak
