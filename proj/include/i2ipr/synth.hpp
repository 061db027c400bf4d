#pragma once

#include "fourier.hpp"

namespace i2ipr {

struct SyntheticCorpusSpec {
    int count = 0;
    int image_dim = 32;       // N; frame is 2N
    int min_shapes = 2;
    int max_shapes = 5;
    double min_intensity = 0.2;
    double max_intensity = 1.0;
    uint64_t seed = 1;

    void validate() const {
        if (count < 0) throw std::invalid_argument("SyntheticCorpusSpec: negative count");
        if (image_dim < 4) throw std::invalid_argument("SyntheticCorpusSpec: image_dim too small");
        if (min_shapes < 1 || max_shapes < min_shapes)
            throw std::invalid_argument("SyntheticCorpusSpec: bad shape counts");
        if (min_intensity < 0.0 || max_intensity > 1.0 || max_intensity < min_intensity)
            throw std::invalid_argument("SyntheticCorpusSpec: intensity range outside [0,1]");
    }
};

// Deterministic per (spec.seed, index): a handful of rectangles, ellipses and
// Gaussian blobs, summed then clamped to [0, 1].
inline ImageGrid synth_image(const SyntheticCorpusSpec& spec, int index) {
    spec.validate();
    const int n = spec.image_dim;
    ImageGrid g = ImageGrid::zeros(n);
    Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(index) + 1));
    const int shapes = spec.min_shapes +
                       static_cast<int>(rng.next_u64() % (spec.max_shapes - spec.min_shapes + 1));
    for (int s = 0; s < shapes; ++s) {
        const double intensity =
            spec.min_intensity + rng.uniform() * (spec.max_intensity - spec.min_intensity);
        const double cr = rng.uniform() * n, cc = rng.uniform() * n;
        const double hr = 1.0 + rng.uniform() * (n / 4.0), hc = 1.0 + rng.uniform() * (n / 4.0);
        const int kind = static_cast<int>(rng.next_u64() % 3);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double dr = (r - cr) / hr, dc = (c - cc) / hc;
                double v = 0.0;
                switch (kind) {
                    case 0: v = (std::abs(dr) <= 1.0 && std::abs(dc) <= 1.0) ? intensity : 0.0; break;
                    case 1: v = (dr * dr + dc * dc <= 1.0) ? intensity : 0.0; break;
                    default: v = intensity * std::exp(-0.5 * (dr * dr + dc * dc)); break;
                }
                g.at(r, c) += v;
            }
    }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g.at(r, c) = std::clamp(g.at(r, c), 0.0, 1.0);
    return g;
}

} // namespace i2ipr
