#include <catch_amalgamated.hpp>

#include <i2ipr/fourier.hpp>

using namespace i2ipr;

namespace {

ImageGrid random_image(int n, uint64_t seed, int p = 0) {
    ImageGrid g = ImageGrid::zeros(n, p);
    Rng rng(seed);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g.at(r, c) = rng.uniform();
    return g;
}

// Unitary 2D DFT straight from the definition, O(P^4).
ComplexSpectrum dft_oracle(const ImageGrid& image) {
    const int p = image.padded_dim;
    ComplexSpectrum spec;
    spec.padded_dim = p;
    spec.values.assign(static_cast<size_t>(p) * p, {0.0, 0.0});
    const double two_pi = 6.283185307179586476925286766559;
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            std::complex<double> acc = 0.0;
            for (int r = 0; r < p; ++r)
                for (int c = 0; c < p; ++c) {
                    const double phase = -two_pi * (static_cast<double>(u) * r + static_cast<double>(v) * c) / p;
                    acc += image.values[static_cast<size_t>(r) * p + c] *
                           std::complex<double>(std::cos(phase), std::sin(phase));
                }
            spec.values[static_cast<size_t>(u) * p + v] = acc / static_cast<double>(p);
        }
    return spec;
}

} // namespace

TEST_CASE("ImageGrid frame geometry") {
    ImageGrid g = ImageGrid::zeros(4);
    CHECK(g.inner_dim == 4);
    CHECK(g.padded_dim == 8);
    CHECK(g.size() == 64);
    size_t in_support = 0;
    for (size_t i = 0; i < g.size(); ++i)
        if (g.in_support(i)) ++in_support;
    CHECK(in_support == 16);
    g.at(2, 3) = 1.5;
    CHECK(g.values[2 * 8 + 3] == 1.5);
    CHECK_THROWS_AS(ImageGrid::zeros(0), std::invalid_argument);
    CHECK_THROWS_AS(ImageGrid::zeros(8, 4), std::invalid_argument);
}

TEST_CASE("axpby and frame_distance") {
    ImageGrid a = random_image(4, 1), b = random_image(4, 2);
    ImageGrid s = axpby(2.0, a, -1.0, b);
    for (size_t i = 0; i < s.size(); ++i)
        CHECK(s.values[i] == 2.0 * a.values[i] - b.values[i]);
    CHECK(frame_distance(a, a) == 0.0);
    CHECK(frame_distance(a, b) == Catch::Approx(axpby(1.0, a, -1.0, b).norm()));
}

TEST_CASE("forward matches the DFT definition oracle") {
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        ImageGrid g = random_image(8, seed);
        ComplexSpectrum fast = forward(g);
        ComplexSpectrum slow = dft_oracle(g);
        double max_err = 0.0;
        for (size_t i = 0; i < fast.size(); ++i)
            max_err = std::max(max_err, std::abs(fast.values[i] - slow.values[i]));
        CHECK(max_err < 1e-10);
    }
}

TEST_CASE("forward is unitary") {
    ImageGrid g = random_image(16, 5);
    ComplexSpectrum s = forward(g);
    double spec_norm = 0.0;
    for (const auto& v : s.values) spec_norm += std::norm(v);
    CHECK(std::sqrt(spec_norm) == Catch::Approx(g.norm()).epsilon(1e-12));
}

TEST_CASE("forward/pseudoinverse round trip") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        ImageGrid g = random_image(16, seed);
        double imag_energy = -1.0;
        ImageGrid back = pseudoinverse(forward(g), g, &imag_energy);
        CHECK(frame_distance(back, g) / g.norm() < 1e-12);
        CHECK(imag_energy < 1e-20);
    }
}

TEST_CASE("pseudoinverse keeps the real part of a complex spectrum") {
    ImageGrid g = random_image(8, 3);
    ComplexSpectrum s = forward(g);
    // breaking conjugate symmetry forces a nonzero imaginary part
    s.values[3] += std::complex<double>(0.0, 0.7);
    double imag_energy = 0.0;
    ImageGrid back = pseudoinverse(s, g, &imag_energy);
    CHECK(imag_energy > 0.0);
    CHECK(back.all_finite());
}

TEST_CASE("measure is exact at alpha = 0 and deterministic") {
    ImageGrid g = random_image(8, 21);
    MagnitudeMeasurements clean = measure(g, 0.0, 99);
    std::vector<double> mags = forward_magnitudes(g);
    for (size_t i = 0; i < mags.size(); ++i) CHECK(clean.magnitudes[i] == mags[i]);

    MagnitudeMeasurements a = measure(g, 3.0, 7);
    MagnitudeMeasurements b = measure(g, 3.0, 7);
    MagnitudeMeasurements c = measure(g, 3.0, 8);
    CHECK(a.magnitudes == b.magnitudes);
    CHECK(a.magnitudes != c.magnitudes);
    for (double m : a.magnitudes) CHECK(m >= 0.0);
}

TEST_CASE("measure noise variance scales with the magnitude") {
    // Var(y^2 - |Ax|^2) = (alpha/255)^2 |Ax|^2 elementwise; check the aggregate
    // moment over many draws on a fixed image.
    ImageGrid g = random_image(8, 33);
    std::vector<double> mags = forward_magnitudes(g);
    const double alpha = 4.0;
    const double a_eff = alpha / kEightBitScale;
    double sum_sq = 0.0, expected = 0.0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        MagnitudeMeasurements y = measure(g, alpha, 1000 + d);
        for (size_t i = 0; i < mags.size(); ++i) {
            const double diff = y.magnitudes[i] * y.magnitudes[i] - mags[i] * mags[i];
            sum_sq += diff * diff;
            expected += a_eff * a_eff * mags[i] * mags[i];
        }
    }
    CHECK(sum_sq / expected == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("snr_db conventions and ordering") {
    ImageGrid g = random_image(16, 44);
    MagnitudeMeasurements clean = measure(g, 0.0, 1);
    CHECK(snr_db(g, clean) == kSnrCapDb);
    CHECK(snr_db(g, clean, SnrConvention::Amplitude) == kSnrCapDb);

    // more noise, less SNR (averaged over seeds to dodge draw luck)
    auto mean_snr = [&](double alpha) {
        double s = 0.0;
        for (uint64_t seed = 1; seed <= 10; ++seed) s += snr_db(g, measure(g, alpha, seed));
        return s / 10.0;
    };
    const double s2 = mean_snr(2.0), s4 = mean_snr(4.0), s8 = mean_snr(8.0);
    CHECK(s2 > s4);
    CHECK(s4 > s8);
}

TEST_CASE("residual is zero exactly at the ground truth") {
    ImageGrid g = random_image(12, 55);
    MagnitudeMeasurements y = measure(g, 0.0, 1);
    CHECK(residual(g, y) < 1e-24);
    ImageGrid off = axpby(1.0, g, 0.0, g);
    off.at(0, 0) += 0.5;
    CHECK(residual(off, y) > 1e-6);
}
