#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace i2ipr {

// Noise scales (alpha, sigma) throughout are specified in 8-bit intensity
// units, i.e. relative to images in [0, 255].  Internal pixel values live in
// [0, 1], so effective standard deviations are divided by this constant.
inline constexpr double kEightBitScale = 255.0;

// Real N x N image embedded in the top-left block of a P x P zero-padded
// frame, with a boolean support mask.  Values are row-major.
struct ImageGrid {
    int inner_dim = 0;            // N
    int padded_dim = 0;           // P
    std::vector<double> values;   // P*P
    std::vector<uint8_t> support; // P*P, nonzero inside the support

    static ImageGrid zeros(int n, int p = 0) {
        if (n <= 0) throw std::invalid_argument("ImageGrid: inner_dim must be positive");
        if (p == 0) p = 2 * n;
        if (p < n) throw std::invalid_argument("ImageGrid: padded_dim < inner_dim");
        ImageGrid g;
        g.inner_dim = n;
        g.padded_dim = p;
        g.values.assign(static_cast<size_t>(p) * p, 0.0);
        g.support.assign(static_cast<size_t>(p) * p, 0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                g.support[static_cast<size_t>(r) * p + c] = 1;
        return g;
    }

    size_t size() const { return values.size(); }

    double& at(int r, int c) { return values[static_cast<size_t>(r) * padded_dim + c]; }
    double at(int r, int c) const { return values[static_cast<size_t>(r) * padded_dim + c]; }
    bool in_support(size_t i) const { return support[i] != 0; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }

    bool same_shape(const ImageGrid& o) const {
        return inner_dim == o.inner_dim && padded_dim == o.padded_dim;
    }
};

inline ImageGrid like(const ImageGrid& g) {
    ImageGrid out = g;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
}

// Elementwise a*x + b*y over matching frames.
inline ImageGrid axpby(double a, const ImageGrid& x, double b, const ImageGrid& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpby: shape mismatch");
    ImageGrid out = x;
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = a * x.values[i] + b * y.values[i];
    return out;
}

inline double frame_distance(const ImageGrid& a, const ImageGrid& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// P x P complex Fourier coefficients under unitary normalization.
struct ComplexSpectrum {
    int padded_dim = 0;
    std::vector<std::complex<double>> values;

    size_t size() const { return values.size(); }
};

// P x P non-negative Fourier magnitudes plus noise metadata.
struct MagnitudeMeasurements {
    int padded_dim = 0;
    std::vector<double> magnitudes;
    double alpha = 0.0;   // noise scale, 8-bit intensity units
    uint64_t seed = 0;    // synthesis seed; 0 for external data

    size_t size() const { return magnitudes.size(); }
};

struct NoiseModel {
    double alpha = 0.0; // variance alpha^2 * |Ax|^2 per element; alpha = 0 is exact
};

} // namespace i2ipr
