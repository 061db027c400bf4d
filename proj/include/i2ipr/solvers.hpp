#pragma once

#include <limits>

#include "projections.hpp"

namespace i2ipr {

struct SolverParams {
    double beta = 0.9;       // feedback constant, in (0, 1]
    double zeta = 0.6;       // acceleration scaling factor
    int accel_period = 10;   // iterations between acceleration updates
    int max_iters = 100;

    void validate() const {
        if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("SolverParams: beta out of (0,1]");
        if (zeta <= 0.0) throw std::invalid_argument("SolverParams: zeta must be positive");
        if (accel_period < 2) throw std::invalid_argument("SolverParams: accel_period < 2");
        if (max_iters < 1) throw std::invalid_argument("SolverParams: max_iters < 1");
    }
};

struct SolverTrace {
    std::vector<double> residuals;
    int iterations_run = 0;
    ImageGrid final;
    ImageGrid best;           // lowest-residual iterate seen
    double best_residual = std::numeric_limits<double>::infinity();
    bool aborted = false;

    void record(const ImageGrid& iterate, double resid) {
        residuals.push_back(resid);
        ++iterations_run;
        if (resid < best_residual) {
            best_residual = resid;
            best = iterate;
        }
    }

    // First iteration (1-based) whose residual drops below the threshold, or
    // iterations_run + 1 if it never does.
    int iterations_to(double threshold) const {
        for (size_t i = 0; i < residuals.size(); ++i)
            if (residuals[i] < threshold) return static_cast<int>(i) + 1;
        return iterations_run + 1;
    }
};

// One ER iteration: P_S P_F x.
inline ImageGrid er_step(const ImageGrid& x, const MagnitudeMeasurements& y) {
    return project_space(project_magnitude(x, y)).first;
}

// One HIO iteration: keep the magnitude-projected value where it is feasible,
// feed back x - beta * x' on the violation set.
inline ImageGrid hio_step(const ImageGrid& x, const MagnitudeMeasurements& y, double beta) {
    if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("hio_step: beta out of (0,1]");
    ImageGrid xp = project_magnitude(x, y);
    ImageGrid out = x;
    for (size_t i = 0; i < out.values.size(); ++i) {
        const bool violates = !xp.in_support(i) || xp.values[i] < 0.0;
        out.values[i] = violates ? x.values[i] - beta * xp.values[i] : xp.values[i];
    }
    return out;
}

// Reflective form [(I + R_S R_F)/2 + (1-beta)(I - P_S) P_F] x.  The space
// reflector is taken with respect to the violation set of P_F x, which makes
// the identity with hio_step exact even under the non-negativity constraint.
// Built from operator compositions so the two code paths stay independent.
inline ImageGrid dr_step(const ImageGrid& x, const MagnitudeMeasurements& y, double beta) {
    if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("dr_step: beta out of (0,1]");
    ImageGrid rf = reflect(x, Constraint::Magnitude, &y);   // 2 P_F x - x
    ImageGrid xp = axpby(0.5, rf, 0.5, x);                  // P_F x
    ConstraintViolationSet gamma = violation_set(xp);
    ImageGrid out = axpby(0.5, x, 0.5, mask_reflect(rf, gamma));
    if (beta != 1.0) {
        ImageGrid correction = axpby(1.0, xp, -1.0, mask_project(xp, gamma));
        out = axpby(1.0, out, 1.0 - beta, correction);
    }
    return out;
}

namespace detail {

inline bool abort_on_nonfinite(SolverTrace& trace, const ImageGrid& iterate) {
    if (iterate.all_finite()) return false;
    trace.aborted = true;
    return true;
}

} // namespace detail

// Accelerated ER: plain ER iterations with a periodic extrapolation from the
// midpoints of successive projection pairs.
inline SolverTrace run_aer(const ImageGrid& x0, const MagnitudeMeasurements& y,
                           const SolverParams& params) {
    params.validate();
    SolverTrace trace;
    ImageGrid x = x0;
    bool have_center = false;
    ImageGrid prev_center;
    for (int n = 1; n <= params.max_iters; ++n) {
        ImageGrid xp = project_magnitude(x, y);
        ImageGrid xpp = project_space(xp).first;
        if (detail::abort_on_nonfinite(trace, xpp)) break;
        trace.record(xpp, residual(xpp, y));

        if (n % params.accel_period == params.accel_period - 1) {
            ImageGrid center = axpby(0.5, xp, 0.5, xpp);
            bool fired = false;
            if (have_center) {
                const double dist = frame_distance(center, prev_center);
                if (dist > 1e-12) {
                    const double r = 0.5 * frame_distance(xp, xpp);
                    // x_{n+1} = c_n + zeta * r * (c_n - c_{n-t}) / ||c_n - c_{n-t}||
                    x = axpby(1.0 + params.zeta * r / dist, center,
                              -params.zeta * r / dist, prev_center);
                    fired = true;
                }
            }
            if (!fired) x = xpp;
            prev_center = std::move(center);
            have_center = true;
        } else {
            x = std::move(xpp);
        }
    }
    trace.final = std::move(x);
    return trace;
}

// Plain ER loop; bit-identical to run_aer with acceleration disabled.
inline SolverTrace run_er(const ImageGrid& x0, const MagnitudeMeasurements& y, int iters) {
    if (iters < 1) throw std::invalid_argument("run_er: iters < 1");
    SolverTrace trace;
    ImageGrid x = x0;
    for (int n = 1; n <= iters; ++n) {
        x = er_step(x, y);
        if (detail::abort_on_nonfinite(trace, x)) break;
        trace.record(x, residual(x, y));
    }
    trace.final = std::move(x);
    return trace;
}

inline SolverTrace run_hio(const ImageGrid& x0, const MagnitudeMeasurements& y,
                           const SolverParams& params, int iters) {
    params.validate();
    if (iters < 1) throw std::invalid_argument("run_hio: iters < 1");
    SolverTrace trace;
    ImageGrid x = x0;
    for (int n = 1; n <= iters; ++n) {
        x = hio_step(x, y, params.beta);
        if (detail::abort_on_nonfinite(trace, x)) break;
        trace.record(x, residual(x, y));
    }
    trace.final = std::move(x);
    return trace;
}

} // namespace i2ipr
