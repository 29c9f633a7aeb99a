#pragma once

#include "banktweak/extractor.hpp"

namespace banktweak {

enum class LossKind { kSimilar, kDissimilar };

// Iteration budget and l-inf constraints for the perturbation solver.
struct Budget {
    double epsilon = 4.0 / 255.0;  // l-inf radius in patch units
    double alpha = 1.0 / 255.0;    // step size
    int r_sim = 150;               // iterations for the similarity loss
    int r_dis = 10;                // iterations for the dissimilarity loss

    void validate() const;
};

// One forging objective: push the extracted feature toward (similar) or
// away from (dissimilar) the target.
struct TargetSpec {
    LossKind loss = LossKind::kSimilar;
    Feature target;
};

struct ForgeResult {
    Patch patch;                      // perturbed patch, within budget of the original
    Feature feature;                  // extract(patch)
    double achieved_distance = 0.0;   // cosine distance to the target
    bool converged = false;
};

// Sign-of-gradient descent on the forging loss under the l-inf budget,
// with per-step clipping of the perturbed patch into [0, 1]. Returns the
// best iterate encountered. converged means the achieved distance beat
// lambda_app in the requested direction; failure is reported, not thrown.
ForgeResult solve_perturbation(const Extractor& extractor, const Patch& patch,
                               const TargetSpec& spec, const Budget& budget,
                               double lambda_app = 0.2);

}  // namespace banktweak
