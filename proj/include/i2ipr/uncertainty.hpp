#pragma once

#include <utility>

#include "io.hpp"

namespace i2ipr {

struct UncertaintyReport {
    double predicted_variance = 0.0;      // mean over support pixels
    std::vector<double> per_pixel_variance; // full frame, row-major
    double calibrated_error = -1.0;       // negative until calibrated
};

// Per-pixel unbiased sample variance across the ensemble; the scalar summary
// averages over the support window.
inline UncertaintyReport empirical_variance(const std::vector<ImageGrid>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("empirical_variance: need at least 2 samples");
    const ImageGrid& first = samples.front();
    for (const ImageGrid& s : samples)
        if (!s.same_shape(first)) throw std::invalid_argument("empirical_variance: shape mismatch");
    const size_t n = first.values.size();
    const double count = static_cast<double>(samples.size());
    std::vector<double> mean(n, 0.0);
    for (const ImageGrid& s : samples)
        for (size_t i = 0; i < n; ++i) mean[i] += s.values[i] / count;
    UncertaintyReport report;
    report.per_pixel_variance.assign(n, 0.0);
    for (const ImageGrid& s : samples)
        for (size_t i = 0; i < n; ++i) {
            const double d = s.values[i] - mean[i];
            report.per_pixel_variance[i] += d * d / (count - 1.0);
        }
    size_t support_count = 0;
    for (size_t i = 0; i < n; ++i)
        if (first.in_support(i)) {
            report.predicted_variance += report.per_pixel_variance[i];
            ++support_count;
        }
    report.predicted_variance /= static_cast<double>(support_count);
    return report;
}

struct CalibrationModel {
    // (predicted, fitted) breakpoints; predicted strictly increasing, fitted
    // nondecreasing.
    std::vector<std::pair<double, double>> breakpoints;
};

// Least-squares nondecreasing fit of actual errors against predictions via
// pool-adjacent-violators; equal predicted values are pre-pooled by averaging.
inline CalibrationModel fit_isotonic(std::vector<std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw std::invalid_argument("fit_isotonic: need at least 2 pairs");
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    struct Block {
        double predicted;
        double sum;
        double weight;
        double value() const { return sum / weight; }
    };
    // pre-pool ties in the predicted value
    std::vector<Block> blocks;
    for (const auto& [pred, actual] : pairs) {
        if (!blocks.empty() && blocks.back().predicted == pred) {
            blocks.back().sum += actual;
            blocks.back().weight += 1.0;
        } else {
            blocks.push_back({pred, actual, 1.0});
        }
    }
    // pool adjacent violators
    std::vector<Block> stack;
    for (Block b : blocks) {
        stack.push_back(b);
        while (stack.size() > 1 && stack[stack.size() - 2].value() > stack.back().value()) {
            Block top = stack.back();
            stack.pop_back();
            stack.back().sum += top.sum;
            stack.back().weight += top.weight;
        }
    }
    // expand pooled blocks back to one breakpoint per distinct predicted value
    CalibrationModel model;
    size_t bi = 0;
    for (const Block& pooled : stack) {
        double consumed = 0.0;
        while (consumed + 0.5 < pooled.weight) {
            model.breakpoints.emplace_back(blocks[bi].predicted, pooled.value());
            consumed += blocks[bi].weight;
            ++bi;
        }
    }
    return model;
}

// Piecewise-linear interpolation through the breakpoints, clamped flat outside
// their range.
inline double calibrate(const CalibrationModel& model, double predicted) {
    if (model.breakpoints.empty()) throw std::invalid_argument("calibrate: empty model");
    const auto& bp = model.breakpoints;
    if (predicted <= bp.front().first) return bp.front().second;
    if (predicted >= bp.back().first) return bp.back().second;
    for (size_t i = 1; i < bp.size(); ++i) {
        if (predicted <= bp[i].first) {
            const double t = (predicted - bp[i - 1].first) / (bp[i].first - bp[i - 1].first);
            return bp[i - 1].second + t * (bp[i].second - bp[i - 1].second);
        }
    }
    return bp.back().second;
}

namespace detail {

// Acklam's rational approximation of the standard normal quantile function;
// absolute error below 1.2e-9 on (0, 1).
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p out of (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace detail

// For each nominal level q, the bound is sqrt(variance) * z_{(1+q)/2}; the
// empirical coverage is the fraction of |error| values inside their bound.
inline std::vector<std::pair<double, double>> coverage_curve(
    const std::vector<std::pair<double, double>>& predictions, const std::vector<double>& levels) {
    if (predictions.empty() || levels.empty()) throw std::invalid_argument("coverage_curve: empty input");
    std::vector<std::pair<double, double>> curve;
    for (double q : levels) {
        if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("coverage_curve: level out of (0,1)");
        const double z = detail::normal_quantile(0.5 * (1.0 + q));
        size_t covered = 0;
        for (const auto& [variance, err] : predictions) {
            const double bound = std::isinf(variance) ? variance : std::sqrt(std::max(variance, 0.0)) * z;
            if (std::abs(err) <= bound) ++covered;
        }
        curve.emplace_back(q, static_cast<double>(covered) / predictions.size());
    }
    return curve;
}

// Text persistence: sorted "predicted,fitted" lines.
inline void write_calibration(const std::string& path, const CalibrationModel& model) {
    io::atomic_write(path, [&](std::ostream& os) {
        os.precision(17);
        os << "predicted,fitted\n";
        for (const auto& [pred, fit] : model.breakpoints) os << pred << "," << fit << "\n";
    });
}

inline CalibrationModel read_calibration(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "predicted,fitted")
        throw std::runtime_error("bad calibration header: " + path);
    CalibrationModel model;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad calibration line: " + line);
        model.breakpoints.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    if (model.breakpoints.empty()) throw std::runtime_error("empty calibration model: " + path);
    return model;
}

inline void write_coverage_csv(const std::string& path,
                               const std::vector<std::pair<double, double>>& curve) {
    io::atomic_write(path, [&](std::ostream& os) {
        os.precision(17);
        os << "nominal,empirical\n";
        for (const auto& [nominal, empirical] : curve) os << nominal << "," << empirical << "\n";
    });
}

} // namespace i2ipr
