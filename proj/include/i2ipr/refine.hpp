#pragma once

#include <functional>

#include "denoiser.hpp"

namespace i2ipr {

struct RefinementConfig {
    int T = 4;                  // refinement steps
    int K = 5;                  // inner data-consistency iterations
    double beta = 0.9;          // feedback constant for the inner solver
    std::vector<double> sigma;  // T+1 noise scales indexed 0..T; empty = all 1
    std::vector<double> lambda; // T blend weights indexed by step-1; empty = default
    uint64_t seed = 1;
    bool final_projection = true; // clamp the returned image to the space constraints

    double sigma_at(int i) const {
        if (sigma.empty()) return 1.0;
        return sigma.at(static_cast<size_t>(i));
    }

    // Log-spaced default, increasing toward the measurements as i grows.
    double lambda_at(int i) const {
        if (!lambda.empty()) return lambda.at(static_cast<size_t>(i) - 1);
        const double lo = -0.64, hi = -0.10;
        const double expo = (T == 1) ? hi : lo + (hi - lo) * (i - 1) / (T - 1);
        return std::pow(10.0, expo);
    }

    void validate() const {
        if (T < 1 || K < 1) throw std::invalid_argument("RefinementConfig: T and K must be positive");
        if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("RefinementConfig: beta out of (0,1]");
        if (!sigma.empty() && static_cast<int>(sigma.size()) != T + 1)
            throw std::invalid_argument("RefinementConfig: sigma must have T+1 entries");
        for (double s : sigma)
            if (s < 0.0) throw std::invalid_argument("RefinementConfig: negative sigma");
        if (!lambda.empty() && static_cast<int>(lambda.size()) != T)
            throw std::invalid_argument("RefinementConfig: lambda must have T entries");
        for (double l : lambda)
            if (l < 0.0 || l > 1.0) throw std::invalid_argument("RefinementConfig: lambda out of [0,1]");
    }
};

struct RefinementState {
    int step = 0;       // i; decreases from T to 1
    ImageGrid x_prime;  // x'_{i+1}
};

// Denoiser callable: (current iterate, step index, crude estimates) -> image.
// Lets tests substitute oracle denoisers for the trained model.
using DenoiserFn = std::function<ImageGrid(const ImageGrid&, int, const std::vector<ImageGrid>&)>;

// y'_i = lambda_i * y + (1 - lambda_i) * |Az| elementwise.
inline MagnitudeMeasurements blend_measurements(const MagnitudeMeasurements& y, const ImageGrid& z,
                                                double lambda_i) {
    if (lambda_i < 0.0 || lambda_i > 1.0) throw std::invalid_argument("blend_measurements: lambda out of [0,1]");
    MagnitudeMeasurements out = y;
    const std::vector<double> mag = forward_magnitudes(z);
    for (size_t i = 0; i < out.magnitudes.size(); ++i)
        out.magnitudes[i] = lambda_i * y.magnitudes[i] + (1.0 - lambda_i) * mag[i];
    return out;
}

// K feedback iterations against the blended magnitudes.
inline ImageGrid data_consistency(const ImageGrid& x, const MagnitudeMeasurements& y_blend,
                                  int K, double beta) {
    if (K < 1) throw std::invalid_argument("data_consistency: K < 1");
    ImageGrid out = x;
    for (int k = 0; k < K; ++k) out = hio_step(out, y_blend, beta);
    return out;
}

// One refinement step i -> i-1:
//   x_i   = denoise(x'_{i+1}, i, inits)
//   y'_i  = lambda_i y + (1 - lambda_i) |A x_i|
//   z     = K feedback iterations from x_i against y'_i
//   x'_i  = (1/i) z + (1 - 1/i) x'_{i+1} + ((i-1)/T) sqrt(sigma_{i-1}^2 - sigma_i^2) eps
// with eps seeded per step; noise scales are in 8-bit intensity units.
inline RefinementState refine_step(const RefinementState& state, const InitEnsemble& ensemble,
                                   const DenoiserFn& denoiser, const MagnitudeMeasurements& y,
                                   const RefinementConfig& cfg) {
    cfg.validate();
    const int i = state.step;
    if (i < 1 || i > cfg.T) throw std::invalid_argument("refine_step: step out of [1, T]");

    ImageGrid x_i = denoiser(state.x_prime, i, ensemble.estimates);
    MagnitudeMeasurements y_blend = blend_measurements(y, x_i, cfg.lambda_at(i));
    ImageGrid z = data_consistency(x_i, y_blend, cfg.K, cfg.beta);

    RefinementState next;
    next.step = i - 1;
    if (i == 1) {
        next.x_prime = std::move(z);
    } else {
        const double radicand = cfg.sigma_at(i - 1) * cfg.sigma_at(i - 1) - cfg.sigma_at(i) * cfg.sigma_at(i);
        if (radicand < -1e-15)
            throw std::invalid_argument("refine_step: sigma schedule increases toward t = 0");
        const double noise_scale =
            (static_cast<double>(i - 1) / cfg.T) * std::sqrt(std::max(radicand, 0.0)) / kEightBitScale;
        next.x_prime = axpby(1.0 / i, z, 1.0 - 1.0 / i, state.x_prime);
        if (noise_scale > 0.0) {
            ImageGrid eps = draw_window_noise(next.x_prime, derive_seed(cfg.seed, static_cast<uint64_t>(i)));
            next.x_prime = axpby(1.0, next.x_prime, noise_scale, eps);
        }
    }
    if (!next.x_prime.all_finite()) throw std::runtime_error("refine_step: non-finite iterate");
    return next;
}

// Model-backed step: refinement step index i is mapped onto the timestep grid
// the model was trained on.
inline DenoiserFn model_denoiser(const DenoiserModel& model, const RefinementConfig& cfg) {
    return [&model, T = cfg.T](const ImageGrid& x, int i, const std::vector<ImageGrid>& inits) {
        const int t_index = static_cast<int>(std::lround(static_cast<double>(i) * model.trained_T / T));
        return denoise(model, x, std::max(t_index, 1), inits);
    };
}

// Full refinement loop: x'_{T+1} = ensemble mean + sigma_T w, then T steps.
inline ImageGrid reconstruct(const MagnitudeMeasurements& y, const InitEnsemble& ensemble,
                             const DenoiserFn& denoiser, const RefinementConfig& cfg) {
    cfg.validate();
    if (ensemble.estimates.empty()) throw std::invalid_argument("reconstruct: empty ensemble");
    RefinementState state;
    state.step = cfg.T;
    state.x_prime = ensemble.mean;
    const double s = cfg.sigma_at(cfg.T) / kEightBitScale;
    if (s > 0.0) {
        ImageGrid w = draw_window_noise(ensemble.mean, derive_seed(cfg.seed, 0));
        state.x_prime = axpby(1.0, state.x_prime, s, w);
    }
    for (int i = cfg.T; i >= 1; --i) state = refine_step(state, ensemble, denoiser, y, cfg);
    return cfg.final_projection ? project_space(state.x_prime).first : state.x_prime;
}

inline ImageGrid reconstruct(const MagnitudeMeasurements& y, const InitEnsemble& ensemble,
                             const DenoiserModel& model, const RefinementConfig& cfg) {
    if (static_cast<int>(ensemble.estimates.size()) != model.k)
        throw std::invalid_argument("reconstruct: ensemble size does not match model");
    return reconstruct(y, ensemble, model_denoiser(model, cfg), cfg);
}

} // namespace i2ipr
