#pragma once

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "grid.hpp"
#include "rng.hpp"

namespace i2ipr {

namespace detail {

// FFTW planning is not thread safe; execution on private buffers is.  Plans
// and work buffers are cached per thread and per transform size.
struct FftPlans {
    int p = 0;
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    explicit FftPlans(int size) : p(size) {
        static std::mutex planner_mutex;
        std::lock_guard<std::mutex> lock(planner_mutex);
        buf = fftw_alloc_complex(static_cast<size_t>(p) * p);
        fwd = fftw_plan_dft_2d(p, p, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(p, p, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlans() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;
};

inline FftPlans& plans_for(int p) {
    thread_local std::map<int, std::unique_ptr<FftPlans>> cache;
    auto& slot = cache[p];
    if (!slot) slot = std::make_unique<FftPlans>(p);
    return *slot;
}

} // namespace detail

// Unitary 2D DFT of the padded frame.  Norm-preserving and linear.
inline ComplexSpectrum forward(const ImageGrid& image) {
    if (!image.all_finite()) throw std::invalid_argument("forward: non-finite input");
    const int p = image.padded_dim;
    auto& plans = detail::plans_for(p);
    const size_t n = image.size();
    for (size_t i = 0; i < n; ++i) {
        plans.buf[i][0] = image.values[i];
        plans.buf[i][1] = 0.0;
    }
    fftw_execute(plans.fwd);
    ComplexSpectrum spec;
    spec.padded_dim = p;
    spec.values.resize(n);
    const double scale = 1.0 / p; // 1/sqrt(P^2)
    for (size_t i = 0; i < n; ++i)
        spec.values[i] = std::complex<double>(plans.buf[i][0] * scale, plans.buf[i][1] * scale);
    return spec;
}

// Inverse unitary DFT; keeps the real part of the full frame and attaches the
// support mask without enforcing it.  The discarded imaginary energy is
// reported through *imag_energy when given.
inline ImageGrid pseudoinverse(const ComplexSpectrum& spectrum,
                               const ImageGrid& support_template,
                               double* imag_energy = nullptr) {
    const int p = spectrum.padded_dim;
    if (p != support_template.padded_dim)
        throw std::invalid_argument("pseudoinverse: dimension mismatch with support");
    auto& plans = detail::plans_for(p);
    const size_t n = spectrum.size();
    for (size_t i = 0; i < n; ++i) {
        plans.buf[i][0] = spectrum.values[i].real();
        plans.buf[i][1] = spectrum.values[i].imag();
    }
    fftw_execute(plans.bwd);
    ImageGrid out = like(support_template);
    const double scale = 1.0 / p;
    double imag2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out.values[i] = plans.buf[i][0] * scale;
        const double im = plans.buf[i][1] * scale;
        imag2 += im * im;
    }
    if (imag_energy) *imag_energy = imag2;
    return out;
}

inline std::vector<double> forward_magnitudes(const ImageGrid& image) {
    ComplexSpectrum s = forward(image);
    std::vector<double> mags(s.size());
    for (size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(s.values[i]);
    return mags;
}

// Synthesizes noisy magnitude measurements: y^2 = |Ax|^2 + w with
// w ~ N(0, alpha^2 |Ax|^2) per element on the 8-bit intensity scale, negative
// intensities clamped to zero before the square root.  Deterministic per seed.
inline MagnitudeMeasurements measure(const ImageGrid& image, double alpha, uint64_t seed) {
    if (alpha < 0.0) throw std::invalid_argument("measure: negative alpha");
    std::vector<double> mags = forward_magnitudes(image);
    MagnitudeMeasurements meas;
    meas.padded_dim = image.padded_dim;
    meas.alpha = alpha;
    meas.seed = seed;
    meas.magnitudes.resize(mags.size());
    const double a = alpha / kEightBitScale;
    Rng rng(seed);
    for (size_t i = 0; i < mags.size(); ++i) {
        if (a == 0.0) {
            meas.magnitudes[i] = mags[i];
            continue;
        }
        const double intensity = mags[i] * mags[i];
        const double w = a * mags[i] * rng.normal();
        meas.magnitudes[i] = std::sqrt(std::max(intensity + w, 0.0));
    }
    return meas;
}

enum class SnrConvention {
    Intensity, // ratio of ||Ax|^2| energies (default)
    Amplitude, // numerator uses |Ax| energies instead
};

inline constexpr double kSnrCapDb = 300.0;

// 10*log10(|||Ax|^2||^2 / ||y^2 - |Ax|^2||^2), capped at 300 dB.
inline double snr_db(const ImageGrid& image, const MagnitudeMeasurements& meas,
                     SnrConvention conv = SnrConvention::Intensity) {
    if (image.padded_dim != meas.padded_dim)
        throw std::invalid_argument("snr_db: dimension mismatch");
    std::vector<double> mags = forward_magnitudes(image);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < mags.size(); ++i) {
        const double intensity = mags[i] * mags[i];
        const double signal = (conv == SnrConvention::Intensity) ? intensity : mags[i];
        num += signal * signal;
        const double d = meas.magnitudes[i] * meas.magnitudes[i] - intensity;
        den += d * d;
    }
    if (den == 0.0) return kSnrCapDb;
    return std::min(10.0 * std::log10(num / den), kSnrCapDb);
}

// Magnitude residual ||y - |A x|||_2^2.
inline double residual(const ImageGrid& image, const MagnitudeMeasurements& meas) {
    if (image.padded_dim != meas.padded_dim)
        throw std::invalid_argument("residual: dimension mismatch");
    std::vector<double> mags = forward_magnitudes(image);
    double s = 0.0;
    for (size_t i = 0; i < mags.size(); ++i) {
        const double d = meas.magnitudes[i] - mags[i];
        s += d * d;
    }
    return s;
}

} // namespace i2ipr
