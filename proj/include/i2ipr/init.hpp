#pragma once

#include <algorithm>
#include <limits>
#include <numeric>

#include "metrics.hpp"
#include "solvers.hpp"
#include "transforms.hpp"

namespace i2ipr {

struct InitConfig {
    int restarts = 100;     // random-phase explorations
    int explore_iters = 50; // HIO iterations per exploration
    int keep = 10;          // candidates kept after exploration
    int refine_iters = 1700;
    int hio_block = 40;     // HIO iterations per refinement cycle
    int aer_block = 10;     // AER iterations per refinement cycle
    // Acceleration period shortened so the extrapolation fires inside a
    // default-sized AER block.
    SolverParams solver{0.9, 0.6, 4, 100};

    void validate() const {
        solver.validate();
        if (restarts < 1 || explore_iters < 1 || keep < 1) throw std::invalid_argument("InitConfig: counts must be positive");
        if (keep > restarts) throw std::invalid_argument("InitConfig: keep > restarts");
        if (hio_block < 1 || aer_block < 1) throw std::invalid_argument("InitConfig: block sizes must be positive");
        if (refine_iters < hio_block + aer_block) throw std::invalid_argument("InitConfig: refine_iters below one full cycle");
    }
};

struct InitEnsemble {
    std::vector<ImageGrid> estimates; // sorted by ascending residual
    std::vector<double> residuals;
    std::vector<uint64_t> seeds;      // exploration seed of each estimate
    ImageGrid mean;
};

struct InitCandidate {
    ImageGrid image;
    double resid = 0.0;
    uint64_t seed = 0;
    bool aborted = false;
};

// Random-phase start: P_S(A^dagger(y .* exp(i theta))) with theta uniform on
// [0, 2 pi) per spectrum element.  A zero seed sentinel forces theta = 0
// (test hook).
inline ImageGrid random_phase_start(const MagnitudeMeasurements& y, uint64_t seed,
                                    const ImageGrid& frame_template) {
    ComplexSpectrum spec;
    spec.padded_dim = y.padded_dim;
    spec.values.resize(y.size());
    Rng rng(seed);
    for (size_t i = 0; i < y.size(); ++i) {
        const double theta = (seed == 0) ? 0.0 : rng.angle();
        spec.values[i] = std::polar(y.magnitudes[i], theta);
    }
    return project_space(pseudoinverse(spec, frame_template)).first;
}

// Explores restarts random-phase starts with short HIO runs.  Per-restart
// seeds are derived from the master seed, so results do not depend on
// evaluation order.
inline std::vector<InitCandidate> explore(const MagnitudeMeasurements& y, const InitConfig& cfg,
                                          uint64_t seed, const ImageGrid& frame_template) {
    cfg.validate();
    std::vector<InitCandidate> candidates(cfg.restarts);
    for (int m = 0; m < cfg.restarts; ++m) {
        InitCandidate& cand = candidates[m];
        cand.seed = derive_seed(seed, static_cast<uint64_t>(m) + 1);
        ImageGrid x0 = random_phase_start(y, cand.seed, frame_template);
        SolverTrace trace = run_hio(x0, y, cfg.solver, cfg.explore_iters);
        cand.aborted = trace.aborted;
        cand.image = std::move(trace.final);
        cand.resid = cand.aborted ? std::numeric_limits<double>::infinity()
                                  : residual(cand.image, y);
    }
    return candidates;
}

// Keeps the `keep` candidates with the smallest residuals; ties broken by
// candidate index, lower first.
inline std::vector<InitCandidate> select_top_k(const std::vector<InitCandidate>& candidates, int keep) {
    if (keep > static_cast<int>(candidates.size()))
        throw std::invalid_argument("select_top_k: keep exceeds candidate count");
    std::vector<size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return candidates[a].resid < candidates[b].resid;
    });
    std::vector<InitCandidate> out;
    out.reserve(keep);
    for (int i = 0; i < keep; ++i) out.push_back(candidates[order[i]]);
    return out;
}

// Alternates HIO and AER blocks until refine_iters iterations are consumed;
// returns the best-residual iterate seen, not the last one.
inline InitCandidate refine_candidate(const ImageGrid& x, const MagnitudeMeasurements& y,
                                      const InitConfig& cfg) {
    cfg.validate();
    InitCandidate best;
    best.image = x;
    best.resid = residual(x, y);
    ImageGrid current = x;
    int remaining = cfg.refine_iters;
    bool hio_phase = true;
    while (remaining > 0) {
        const int block = std::min(hio_phase ? cfg.hio_block : cfg.aer_block, remaining);
        SolverTrace trace;
        if (hio_phase) {
            trace = run_hio(current, y, cfg.solver, block);
        } else {
            SolverParams aer = cfg.solver;
            aer.max_iters = block;
            trace = run_aer(current, y, aer);
        }
        if (trace.best_residual < best.resid) {
            best.resid = trace.best_residual;
            best.image = trace.best;
        }
        if (trace.aborted) {
            best.aborted = true; // best-so-far still valid
            break;
        }
        current = std::move(trace.final);
        remaining -= trace.iterations_run;
        hio_phase = !hio_phase;
    }
    return best;
}

// Full initialization: explore, select top-k, refine each, assemble ensemble.
inline InitEnsemble initialize(const MagnitudeMeasurements& y, const InitConfig& cfg,
                               uint64_t seed, const ImageGrid& frame_template) {
    cfg.validate();
    std::vector<InitCandidate> explored = explore(y, cfg, seed, frame_template);
    std::vector<InitCandidate> selected = select_top_k(explored, cfg.keep);
    std::vector<InitCandidate> refined;
    refined.reserve(selected.size());
    for (const InitCandidate& cand : selected) {
        InitCandidate r = refine_candidate(cand.image, y, cfg);
        r.seed = cand.seed;
        refined.push_back(std::move(r));
    }
    std::stable_sort(refined.begin(), refined.end(),
                     [](const InitCandidate& a, const InitCandidate& b) { return a.resid < b.resid; });
    // Members may land on point-reflected or circularly shifted solutions
    // (trivial ambiguities that leave the residual unchanged); orient each
    // toward the best estimate so the ensemble mean is coherent.
    for (size_t i = 1; i < refined.size(); ++i)
        refined[i].image = resolve_ambiguity(refined[i].image, refined[0].image, true).first;
    InitEnsemble ensemble;
    ensemble.mean = like(frame_template);
    for (InitCandidate& cand : refined) {
        for (size_t i = 0; i < ensemble.mean.values.size(); ++i)
            ensemble.mean.values[i] += cand.image.values[i] / refined.size();
        ensemble.estimates.push_back(std::move(cand.image));
        ensemble.residuals.push_back(cand.resid);
        ensemble.seeds.push_back(cand.seed);
    }
    return ensemble;
}

// Aligns every ensemble member to a reference image over the trivial
// ambiguities (point reflection, circular shifts) and recomputes the mean.
// Used at dataset-construction time, when the ground truth is available, so
// training inputs and labels share one orientation.
inline void align_ensemble(InitEnsemble& ensemble, const ImageGrid& reference) {
    ensemble.mean = like(reference);
    for (ImageGrid& est : ensemble.estimates) {
        est = resolve_ambiguity(est, reference, true).first;
        for (size_t i = 0; i < ensemble.mean.values.size(); ++i)
            ensemble.mean.values[i] += est.values[i] / ensemble.estimates.size();
    }
}

} // namespace i2ipr
