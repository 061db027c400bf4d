#pragma once

#include "fourier.hpp"
#include "transforms.hpp"

namespace i2ipr {

inline constexpr double kPsnrCapDb = 300.0;

enum class Ambiguity { Identity, Rot180 };

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    Ambiguity ambiguity_used = Ambiguity::Identity;
    bool shift_search_used = false;
};

// PSNR over the support pixels, peak 1, capped at 300 dB.
inline double psnr(const ImageGrid& x, const ImageGrid& ref) {
    if (!x.same_shape(ref)) throw std::invalid_argument("psnr: dimension mismatch");
    double mse = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < x.values.size(); ++i) {
        if (!x.in_support(i)) continue;
        const double d = x.values[i] - ref.values[i];
        mse += d * d;
        ++count;
    }
    mse /= static_cast<double>(count);
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(10.0 * std::log10(1.0 / mse), kPsnrCapDb);
}

namespace detail {

inline std::vector<double> gaussian_window_11() {
    std::vector<double> w(11 * 11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            const double dr = r - 5, dc = c - 5;
            w[r * 11 + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
            sum += w[r * 11 + c];
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace detail

// Single-scale SSIM over the N x N support window, 11x11 Gaussian weighting,
// mean over valid (fully interior) window positions.
inline double ssim(const ImageGrid& x, const ImageGrid& ref) {
    if (!x.same_shape(ref)) throw std::invalid_argument("ssim: dimension mismatch");
    const int n = x.inner_dim;
    if (n < 11) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    static const std::vector<double> w = detail::gaussian_window_11();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + 11 <= n; ++r0) {
        for (int c0 = 0; c0 + 11 <= n; ++c0) {
            double mx = 0, my = 0;
            for (int r = 0; r < 11; ++r)
                for (int c = 0; c < 11; ++c) {
                    const double wv = w[r * 11 + c];
                    mx += wv * x.at(r0 + r, c0 + c);
                    my += wv * ref.at(r0 + r, c0 + c);
                }
            double vx = 0, vy = 0, cov = 0;
            for (int r = 0; r < 11; ++r)
                for (int c = 0; c < 11; ++c) {
                    const double wv = w[r * 11 + c];
                    const double dx = x.at(r0 + r, c0 + c) - mx;
                    const double dy = ref.at(r0 + r, c0 + c) - my;
                    vx += wv * dx * dx;
                    vy += wv * dy * dy;
                    cov += wv * dx * dy;
                }
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / count;
}

namespace detail {

// Circular shift of the whole frame.
inline ImageGrid circular_shift(const ImageGrid& x, int dr, int dc) {
    const int p = x.padded_dim;
    ImageGrid out = x;
    for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c)
            out.values[static_cast<size_t>(((r + dr) % p + p) % p) * p + ((c + dc) % p + p) % p] =
                x.values[static_cast<size_t>(r) * p + c];
    return out;
}

// Best circular alignment of x against ref by FFT cross-correlation.
inline ImageGrid best_shift(const ImageGrid& x, const ImageGrid& ref) {
    ComplexSpectrum fx = forward(x);
    ComplexSpectrum fr = forward(ref);
    for (size_t i = 0; i < fx.size(); ++i)
        fx.values[i] = fr.values[i] * std::conj(fx.values[i]);
    ImageGrid corr = pseudoinverse(fx, x);
    size_t best = 0;
    for (size_t i = 1; i < corr.values.size(); ++i)
        if (corr.values[i] > corr.values[best]) best = i;
    const int p = x.padded_dim;
    return circular_shift(x, static_cast<int>(best) / p, static_cast<int>(best) % p);
}

} // namespace detail

// Resolves the conjugate-inversion trivial ambiguity by trying both the
// original and the rot180 candidate; circular shifts are searched only when
// explicitly requested (diagnostic mode).
inline std::pair<ImageGrid, MetricReport> resolve_ambiguity(const ImageGrid& x, const ImageGrid& ref,
                                                            bool search_shifts = false) {
    if (!x.same_shape(ref)) throw std::invalid_argument("resolve_ambiguity: dimension mismatch");
    ImageGrid cand_id = x;
    ImageGrid cand_rot = rot180(x);
    if (search_shifts) {
        cand_id = detail::best_shift(cand_id, ref);
        cand_rot = detail::best_shift(cand_rot, ref);
    }
    const double p_id = psnr(cand_id, ref);
    const double p_rot = psnr(cand_rot, ref);
    MetricReport report;
    report.shift_search_used = search_shifts;
    ImageGrid best;
    if (p_rot > p_id) {
        report.ambiguity_used = Ambiguity::Rot180;
        report.psnr_db = p_rot;
        best = std::move(cand_rot);
    } else {
        report.ambiguity_used = Ambiguity::Identity;
        report.psnr_db = p_id;
        best = std::move(cand_id);
    }
    report.ssim = (best.inner_dim >= 11) ? ssim(best, ref) : 0.0;
    return {std::move(best), report};
}

} // namespace i2ipr
