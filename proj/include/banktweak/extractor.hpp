#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "banktweak/feature.hpp"

namespace banktweak {

using Patch = Eigen::VectorXd;  // components in [0, 1]

struct ExtractorConfig {
    std::uint64_t seed = 7;
    int patch_dim = 64;
    int hidden_dim = 256;
    int feature_dim = 512;
    // Scale on the input layer. Tuned so that an l-inf ball of radius
    // 4/255 reaches far across the feature sphere while pixel noise of
    // 1/255 barely moves the embedding.
    double input_gain = 24.0;

    void validate() const;
};

// Seeded two-layer tanh network with exact l2 normalization. Weights are
// drawn once from the seed and frozen; instances are immutable and safe
// for concurrent readers. Forward and backward kernels exist in an
// OpenMP-parallel flavor (the default) and a serial reference flavor
// that tests compare against bit for bit.
class Extractor {
public:
    explicit Extractor(const ExtractorConfig& cfg);

    const ExtractorConfig& config() const { return cfg_; }
    int patch_dim() const { return cfg_.patch_dim; }
    int feature_dim() const { return cfg_.feature_dim; }

    // Forward intermediates needed by the backward pass.
    struct Workspace {
        Eigen::VectorXd hidden;   // tanh activations
        Eigen::VectorXd raw;      // pre-normalization embedding
        double raw_norm = 0.0;
        Feature feature;
    };

    Feature extract(const Patch& p) const;
    Feature extract_serial(const Patch& p) const;

    void forward(const Patch& p, Workspace& ws) const;
    void forward_serial(const Patch& p, Workspace& ws) const;

    // Exact gradient of upstream . feature with respect to the patch,
    // including the normalization Jacobian.
    Eigen::VectorXd grad_wrt_patch(const Patch& p, const Eigen::VectorXd& upstream) const;
    Eigen::VectorXd grad_from_workspace(const Workspace& ws,
                                        const Eigen::VectorXd& upstream) const;
    Eigen::VectorXd grad_from_workspace_serial(const Workspace& ws,
                                               const Eigen::VectorXd& upstream) const;

    // Batch extraction, parallel over patches.
    std::vector<Feature> extract_batch(const std::vector<Patch>& patches) const;

    // Replay support: the seed and shape fully determine the weights; the
    // checksum guards against drift in the generation scheme.
    void save(const std::filesystem::path& path) const;
    static Extractor load(const std::filesystem::path& path);
    std::uint64_t weight_checksum() const;

private:
    template <bool Parallel>
    void forward_impl(const Patch& p, Workspace& ws) const;
    template <bool Parallel>
    Eigen::VectorXd backward_impl(const Workspace& ws, const Eigen::VectorXd& upstream) const;

    ExtractorConfig cfg_;
    double in_scale_ = 0.0;   // input_gain / sqrt(patch_dim)
    double out_scale_ = 0.0;  // 1 / sqrt(hidden_dim)
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w1_;   // H x P
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w2_;   // D x H
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w1t_;  // P x H
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w2t_;  // H x D
    Eigen::VectorXd b1_;
};

void validate_patch(const Patch& p);

}  // namespace banktweak
