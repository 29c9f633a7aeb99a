#include "banktweak/pgd.hpp"

#include <stdexcept>

namespace banktweak {

void Budget::validate() const {
    if (epsilon < 0.0) throw std::invalid_argument("budget: epsilon must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("budget: alpha must be positive");
    if (epsilon > 0.0 && alpha > epsilon)
        throw std::invalid_argument("budget: alpha must not exceed epsilon");
    if (r_sim < 1 || r_dis < 1) throw std::invalid_argument("budget: iteration counts must be >= 1");
}

ForgeResult solve_perturbation(const Extractor& extractor, const Patch& patch,
                               const TargetSpec& spec, const Budget& budget,
                               double lambda_app) {
    budget.validate();
    validate_patch(patch);
    if (spec.target.dim() != extractor.feature_dim())
        throw std::invalid_argument("solve_perturbation: target dimension mismatch");

    const int iterations = spec.loss == LossKind::kSimilar ? budget.r_sim : budget.r_dis;
    const bool want_close = spec.loss == LossKind::kSimilar;

    Extractor::Workspace ws;
    extractor.forward(patch, ws);
    double dist = cosine_distance(ws.feature, spec.target);

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(patch.size());
    ForgeResult best;
    best.patch = patch;
    best.feature = ws.feature;
    best.achieved_distance = dist;

    // Minimizing L = C(f, target) for the similar loss and L = -C for the
    // dissimilar one; dC/df = -target either way, only the step direction
    // flips.
    const double step_sign = want_close ? -1.0 : 1.0;

    for (int r = 0; r < iterations; ++r) {
        const Eigen::VectorXd grad = extractor.grad_from_workspace(ws, -spec.target.v);
        delta += step_sign * budget.alpha * grad.array().sign().matrix();
        delta = delta.cwiseMax(-budget.epsilon).cwiseMin(budget.epsilon);
        delta = delta.cwiseMax(-patch).cwiseMin((1.0 - patch.array()).matrix());

        const Patch perturbed = patch + delta;
        extractor.forward(perturbed, ws);
        dist = cosine_distance(ws.feature, spec.target);
        const bool improved = want_close ? dist < best.achieved_distance
                                         : dist > best.achieved_distance;
        if (improved) {
            best.patch = perturbed;
            best.feature = ws.feature;
            best.achieved_distance = dist;
        }
    }

    best.converged = want_close ? best.achieved_distance < lambda_app
                                : best.achieved_distance > lambda_app;
    return best;
}

}  // namespace banktweak
