// Timing comparison between the serial reference kernels and the OpenMP
// ones: single extraction, gradient, batch extraction and a full forge.

#include <omp.h>

#include <cstdio>
#include <vector>

#include "banktweak/pgd.hpp"
#include "banktweak/rng.hpp"

using namespace banktweak;

namespace {

Patch random_patch(Rng& rng, int dim) {
    Patch p(dim);
    for (int i = 0; i < dim; ++i) p(i) = rng.uniform();
    return p;
}

template <typename F>
double time_ms(int iters, F&& fn) {
    const double t0 = omp_get_wtime();
    for (int i = 0; i < iters; ++i) fn(i);
    return (omp_get_wtime() - t0) * 1000.0 / iters;
}

void bench_dim(int feature_dim) {
    ExtractorConfig cfg;
    cfg.feature_dim = feature_dim;
    const Extractor extractor(cfg);
    Rng rng(42);

    const int n = 256;
    std::vector<Patch> patches;
    for (int i = 0; i < n; ++i) patches.push_back(random_patch(rng, cfg.patch_dim));
    Eigen::VectorXd upstream = Eigen::VectorXd::Ones(feature_dim).normalized();

    std::printf("feature_dim = %d (threads = %d)\n", feature_dim, omp_get_max_threads());

    double sink = 0.0;
    const double fwd_serial =
        time_ms(n, [&](int i) { sink += extractor.extract_serial(patches[i]).v(0); });
    const double fwd_omp = time_ms(n, [&](int i) { sink += extractor.extract(patches[i]).v(0); });
    std::printf("  forward        serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", fwd_serial,
                fwd_omp, fwd_serial / fwd_omp);

    Extractor::Workspace ws;
    extractor.forward(patches[0], ws);
    const double bwd_serial = time_ms(
        n, [&](int) { sink += extractor.grad_from_workspace_serial(ws, upstream)(0); });
    const double bwd_omp =
        time_ms(n, [&](int) { sink += extractor.grad_from_workspace(ws, upstream)(0); });
    std::printf("  backward       serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", bwd_serial,
                bwd_omp, bwd_serial / bwd_omp);

    const double batch_serial = time_ms(4, [&](int) {
        for (const Patch& p : patches) sink += extractor.extract_serial(p).v(0);
    });
    const double batch_omp =
        time_ms(4, [&](int) { sink += extractor.extract_batch(patches)[0].v(0); });
    std::printf("  batch x%-4d    serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", n,
                batch_serial, batch_omp, batch_serial / batch_omp);

    TargetSpec spec;
    spec.loss = LossKind::kSimilar;
    spec.target = extractor.extract(patches[1]);
    Budget budget;
    const double forge =
        time_ms(4, [&](int i) { sink += solve_perturbation(extractor, patches[i], spec, budget)
                                            .achieved_distance; });
    std::printf("  forge (R=150)  %8.3f ms\n", forge);
    std::printf("  (checksum %.6f)\n\n", sink);
}

}  // namespace

int main() {
    bench_dim(64);
    bench_dim(512);
    return 0;
}
