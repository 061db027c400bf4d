#pragma once

#include "refine.hpp"
#include "transforms.hpp"

namespace i2ipr {

struct EnsembleResult {
    std::vector<ImageGrid> samples; // 2p branch outputs
    std::vector<ImageGrid> combined; // p pairwise means
    ImageGrid mean;
    int p = 0;
};

namespace detail {

inline InitEnsemble transform_ensemble(const InitEnsemble& ensemble, const EquivariantTransform& t) {
    InitEnsemble out;
    out.residuals = ensemble.residuals;
    out.seeds = ensemble.seeds;
    out.mean = like(ensemble.mean);
    for (const ImageGrid& g : ensemble.estimates) {
        ImageGrid tg = apply_transform(g, t);
        for (size_t i = 0; i < out.mean.values.size(); ++i)
            out.mean.values[i] += tg.values[i] / ensemble.estimates.size();
        out.estimates.push_back(std::move(tg));
    }
    return out;
}

} // namespace detail

struct CombinedRun {
    ImageGrid combined;      // half(plain + inverse-transformed)
    ImageGrid branch_plain;  // reconstruction from the ensemble as-is
    ImageGrid branch_mapped; // inverse-transformed reconstruction from the transformed ensemble
};

// One aggregation run: reconstruct from the ensemble and from its transformed
// copy with fresh derived noise seeds, map the second branch back, average.
inline CombinedRun combined_run(const MagnitudeMeasurements& y, const InitEnsemble& ensemble,
                                const DenoiserModel& model, const RefinementConfig& cfg,
                                const EquivariantTransform& t) {
    RefinementConfig plain_cfg = cfg;
    plain_cfg.seed = derive_seed(cfg.seed, 1);
    RefinementConfig mapped_cfg = cfg;
    mapped_cfg.seed = derive_seed(cfg.seed, 2);

    CombinedRun run;
    run.branch_plain = reconstruct(y, ensemble, model, plain_cfg);
    InitEnsemble transformed = detail::transform_ensemble(ensemble, t);
    run.branch_mapped = invert_transform(reconstruct(y, transformed, model, mapped_cfg), t);
    run.combined = axpby(0.5, run.branch_plain, 0.5, run.branch_mapped);
    return run;
}

// p independent combined runs; the 2p branch outputs are the posterior samples
// and the overall mean is their average.
inline EnsembleResult aggregate(const MagnitudeMeasurements& y, const InitEnsemble& ensemble,
                                const DenoiserModel& model, const RefinementConfig& cfg,
                                int p, const EquivariantTransform& t = {TransformKind::Rot180}) {
    if (p < 1) throw std::invalid_argument("aggregate: p < 1");
    EnsembleResult result;
    result.p = p;
    result.mean = like(ensemble.mean);
    for (int q = 0; q < p; ++q) {
        RefinementConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(cfg.seed, static_cast<uint64_t>(q) + 1);
        CombinedRun run = combined_run(y, ensemble, model, run_cfg, t);
        result.samples.push_back(std::move(run.branch_plain));
        result.samples.push_back(std::move(run.branch_mapped));
        result.combined.push_back(std::move(run.combined));
    }
    for (const ImageGrid& s : result.samples)
        for (size_t i = 0; i < result.mean.values.size(); ++i)
            result.mean.values[i] += s.values[i] / result.samples.size();
    return result;
}

} // namespace i2ipr
