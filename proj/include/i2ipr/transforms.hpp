#pragma once

#include "grid.hpp"

namespace i2ipr {

enum class TransformKind {
    Rot180, // point reflection within the support window; magnitude-preserving
    FlipH,  // experimental: does not preserve oversampled magnitudes in general
    FlipV,  // experimental
};

struct EquivariantTransform {
    TransformKind kind = TransformKind::Rot180;
};

// Permutes pixels within the N x N support window; the rest of the frame and
// the support mask are left untouched.  All kinds are involutions, so the
// inverse transform is the transform itself.
inline ImageGrid apply_transform(const ImageGrid& x, const EquivariantTransform& t) {
    ImageGrid out = x;
    const int n = x.inner_dim;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            int sr = r, sc = c;
            switch (t.kind) {
                case TransformKind::Rot180: sr = n - 1 - r; sc = n - 1 - c; break;
                case TransformKind::FlipH: sc = n - 1 - c; break;
                case TransformKind::FlipV: sr = n - 1 - r; break;
            }
            out.at(r, c) = x.at(sr, sc);
        }
    }
    return out;
}

inline ImageGrid invert_transform(const ImageGrid& x, const EquivariantTransform& t) {
    return apply_transform(x, t); // involutive
}

inline ImageGrid rot180(const ImageGrid& x) {
    return apply_transform(x, EquivariantTransform{TransformKind::Rot180});
}

} // namespace i2ipr
