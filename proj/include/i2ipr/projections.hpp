#pragma once

#include "fourier.hpp"

namespace i2ipr {

// Frame positions violating support or non-negativity.
struct ConstraintViolationSet {
    std::vector<uint32_t> indices;
    size_t count() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

// Magnitude projection P_F: replace spectrum magnitudes by y, keep phases.
// Where |Ax| = 0 the phase factor is taken as 1.  The complex field before
// the real-part truncation is exposed for tests via *pre_truncation.
inline ImageGrid project_magnitude(const ImageGrid& x, const MagnitudeMeasurements& y,
                                   ComplexSpectrum* pre_truncation = nullptr) {
    if (x.padded_dim != y.padded_dim)
        throw std::invalid_argument("project_magnitude: dimension mismatch");
    ComplexSpectrum spec = forward(x);
    for (size_t i = 0; i < spec.size(); ++i) {
        const double mag = std::abs(spec.values[i]);
        if (mag == 0.0)
            spec.values[i] = std::complex<double>(y.magnitudes[i], 0.0);
        else
            spec.values[i] *= y.magnitudes[i] / mag;
    }
    if (pre_truncation) *pre_truncation = spec;
    return pseudoinverse(spec, x);
}

// Space projection P_S: zero everything outside the support mask or negative.
// Idempotent; returns the exact violation set.
inline std::pair<ImageGrid, ConstraintViolationSet> project_space(const ImageGrid& x) {
    ImageGrid out = x;
    ConstraintViolationSet gamma;
    for (size_t i = 0; i < out.values.size(); ++i) {
        if (!out.in_support(i) || out.values[i] < 0.0) {
            gamma.indices.push_back(static_cast<uint32_t>(i));
            out.values[i] = 0.0;
        }
    }
    return {std::move(out), std::move(gamma)};
}

// Violation set of an arbitrary frame without modifying it.
inline ConstraintViolationSet violation_set(const ImageGrid& x) {
    ConstraintViolationSet gamma;
    for (size_t i = 0; i < x.values.size(); ++i)
        if (!x.in_support(i) || x.values[i] < 0.0)
            gamma.indices.push_back(static_cast<uint32_t>(i));
    return gamma;
}

// Linear masking projector: zero on the given index set, identity elsewhere.
inline ImageGrid mask_project(const ImageGrid& x, const ConstraintViolationSet& gamma) {
    ImageGrid out = x;
    for (uint32_t i : gamma.indices) out.values[i] = 0.0;
    return out;
}

// 2 M - I for the masking projector above.
inline ImageGrid mask_reflect(const ImageGrid& x, const ConstraintViolationSet& gamma) {
    return axpby(2.0, mask_project(x, gamma), -1.0, x);
}

enum class Constraint { Space, Magnitude };

// Reflector 2 P - I for the selected projector.
inline ImageGrid reflect(const ImageGrid& x, Constraint which,
                         const MagnitudeMeasurements* y = nullptr) {
    ImageGrid projected;
    if (which == Constraint::Space) {
        projected = project_space(x).first;
    } else {
        if (!y) throw std::invalid_argument("reflect: magnitude reflection requires y");
        projected = project_magnitude(x, *y);
    }
    return axpby(2.0, projected, -1.0, x);
}

} // namespace i2ipr
