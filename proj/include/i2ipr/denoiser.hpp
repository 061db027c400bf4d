#pragma once

#include "init.hpp"
#include "io.hpp"

namespace i2ipr {

// ---------------------------------------------------------------------------
// Model description and parameter layout
// ---------------------------------------------------------------------------

// Small convolutional residual denoiser with FiLM-style timestep conditioning.
// Contract: k+1 input channels (current estimate plus k crude estimates), one
// output channel, and the prediction is subtracted from the mean of the
// inputs.  The backbone is deliberately swappable behind this descriptor.
struct DenoiserArch {
    int input_channels = 0;       // k + 1
    int hidden_channels = 16;
    int layers = 4;               // conv layers including the output conv
    int kernel_size = 3;
    int timestep_embed_dim = 16;  // must be even

    void validate() const {
        if (input_channels < 1) throw std::invalid_argument("DenoiserArch: input_channels < 1");
        if (hidden_channels < 1 || layers < 2) throw std::invalid_argument("DenoiserArch: bad backbone size");
        if (kernel_size < 1 || kernel_size % 2 == 0) throw std::invalid_argument("DenoiserArch: kernel must be odd");
        if (timestep_embed_dim < 2 || timestep_embed_dim % 2 != 0)
            throw std::invalid_argument("DenoiserArch: embed dim must be even");
    }

    int in_channels_of(int layer) const { return layer == 0 ? input_channels : hidden_channels; }
    int out_channels_of(int layer) const { return layer == layers - 1 ? 1 : hidden_channels; }
};

// Offsets into the flat parameter vector.
struct ParamLayout {
    std::vector<size_t> conv_w, conv_b;
    size_t embed_w = 0, embed_b = 0;
    std::vector<size_t> film_wg, film_bg, film_wb, film_bb;
    size_t total = 0;

    explicit ParamLayout(const DenoiserArch& arch) {
        arch.validate();
        const int kk = arch.kernel_size * arch.kernel_size;
        const int e = arch.timestep_embed_dim;
        size_t off = 0;
        for (int l = 0; l < arch.layers; ++l) {
            conv_w.push_back(off);
            off += static_cast<size_t>(arch.out_channels_of(l)) * arch.in_channels_of(l) * kk;
            conv_b.push_back(off);
            off += arch.out_channels_of(l);
        }
        embed_w = off;
        off += static_cast<size_t>(e) * e;
        embed_b = off;
        off += e;
        for (int l = 0; l < arch.layers - 1; ++l) {
            const size_t c = arch.out_channels_of(l);
            film_wg.push_back(off); off += c * e;
            film_bg.push_back(off); off += c;
            film_wb.push_back(off); off += c * e;
            film_bb.push_back(off); off += c;
        }
        total = off;
    }
};

struct DenoiserModel {
    DenoiserArch arch;
    std::vector<double> params;
    int k = 0;            // number of crude estimates the model expects
    int trained_T = 32;   // highest timestep grid the model was trained on

    static DenoiserModel zeros(int k, int hidden = 16, int layers = 4, int kernel = 3,
                               int embed_dim = 16, int trained_T = 32) {
        DenoiserModel m;
        m.arch = DenoiserArch{k + 1, hidden, layers, kernel, embed_dim};
        m.params.assign(ParamLayout(m.arch).total, 0.0);
        m.k = k;
        m.trained_T = trained_T;
        return m;
    }
};

// ---------------------------------------------------------------------------
// Degradation schedule
// ---------------------------------------------------------------------------

struct DegradationSample {
    double t = 0.0;       // grid value i / T
    int t_index = 0;      // grid index i
    ImageGrid x_t;
    ImageGrid target;
    std::vector<ImageGrid> inits;
    uint64_t epsilon_seed = 0;
};

// Seeded N(0, 1) draw over the support window; zero outside.
inline ImageGrid draw_window_noise(const ImageGrid& frame_template, uint64_t seed) {
    ImageGrid eps = like(frame_template);
    Rng rng(seed);
    const int n = eps.inner_dim;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) eps.at(r, c) = rng.normal();
    return eps;
}

// x_t = (1 - t) target + t z + t sigma_t eps with z the mean of the crude
// estimates and eps a seeded standard normal draw on the support window.
// sigma_t is in 8-bit intensity units.
inline DegradationSample degrade(const ImageGrid& target, const std::vector<ImageGrid>& inits,
                                 double t, double sigma_t, uint64_t seed) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("degrade: t out of [0,1]");
    if (sigma_t < 0.0) throw std::invalid_argument("degrade: negative sigma");
    if (inits.empty()) throw std::invalid_argument("degrade: no crude estimates");
    for (const ImageGrid& g : inits)
        if (!g.same_shape(target)) throw std::invalid_argument("degrade: dimension mismatch");
    ImageGrid z = like(target);
    for (const ImageGrid& g : inits)
        for (size_t i = 0; i < z.values.size(); ++i) z.values[i] += g.values[i] / inits.size();
    ImageGrid eps = draw_window_noise(target, seed);
    DegradationSample s;
    s.t = t;
    s.target = target;
    s.inits = inits;
    s.epsilon_seed = seed;
    s.x_t = like(target);
    const double noise_scale = t * sigma_t / kEightBitScale;
    for (size_t i = 0; i < s.x_t.values.size(); ++i)
        s.x_t.values[i] = (1.0 - t) * target.values[i] + t * z.values[i] + noise_scale * eps.values[i];
    return s;
}

// Sinusoidal positional encoding of the timestep index (pre-affine part; the
// learned affine map lives in the model parameters).
inline std::vector<double> timestep_embedding(int t_index, int dim) {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("timestep_embedding: dim must be even");
    std::vector<double> e(dim);
    const int half = dim / 2;
    for (int j = 0; j < half; ++j) {
        const double freq = std::pow(10000.0, -static_cast<double>(j) / half);
        e[2 * j] = std::sin(t_index * freq);
        e[2 * j + 1] = std::cos(t_index * freq);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Forward / backward passes
// ---------------------------------------------------------------------------

namespace detail {

inline double silu(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return x * s;
}
inline double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

// All activations needed for backprop of one sample.
struct DenoiserTape {
    int n = 0; // window side
    std::vector<double> embed_raw;             // fixed positional encoding
    std::vector<double> embed;                 // after learned affine
    std::vector<std::vector<double>> inputs;   // (k+1) x n^2 channel stack
    std::vector<std::vector<double>> conv_out; // per layer, pre-FiLM
    std::vector<std::vector<double>> film_out; // per conditioned layer, pre-activation
    std::vector<std::vector<double>> act;      // per conditioned layer, post-activation
    std::vector<double> residual_window;       // output conv result
    std::vector<double> out_window;            // mean(inputs) - residual
};

inline void conv2d(const double* w, const double* b, const std::vector<double>& in,
                   int in_ch, int out_ch, int n, int kernel, std::vector<double>& out) {
    const int off = kernel / 2;
    out.assign(static_cast<size_t>(out_ch) * n * n, 0.0);
    for (int o = 0; o < out_ch; ++o) {
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                double acc = b[o];
                for (int i = 0; i < in_ch; ++i) {
                    const double* wk = w + (static_cast<size_t>(o) * in_ch + i) * kernel * kernel;
                    const double* img = in.data() + static_cast<size_t>(i) * n * n;
                    for (int dr = 0; dr < kernel; ++dr) {
                        const int rr = r + dr - off;
                        if (rr < 0 || rr >= n) continue;
                        for (int dc = 0; dc < kernel; ++dc) {
                            const int cc = c + dc - off;
                            if (cc < 0 || cc >= n) continue;
                            acc += wk[dr * kernel + dc] * img[rr * n + cc];
                        }
                    }
                }
                out[(static_cast<size_t>(o) * n + r) * n + c] = acc;
            }
        }
    }
}

// Gradients of conv2d with respect to weights, bias and input.
inline void conv2d_backward(const double* w, const std::vector<double>& in,
                            const std::vector<double>& dout, int in_ch, int out_ch, int n,
                            int kernel, double* dw, double* db, std::vector<double>* din) {
    const int off = kernel / 2;
    if (din) din->assign(static_cast<size_t>(in_ch) * n * n, 0.0);
    for (int o = 0; o < out_ch; ++o) {
        const double* go = dout.data() + static_cast<size_t>(o) * n * n;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) db[o] += go[r * n + c];
        for (int i = 0; i < in_ch; ++i) {
            double* dwk = dw + (static_cast<size_t>(o) * in_ch + i) * kernel * kernel;
            const double* wk = w + (static_cast<size_t>(o) * in_ch + i) * kernel * kernel;
            const double* img = in.data() + static_cast<size_t>(i) * n * n;
            double* dimg = din ? din->data() + static_cast<size_t>(i) * n * n : nullptr;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    const double g = go[r * n + c];
                    if (g == 0.0) continue;
                    for (int dr = 0; dr < kernel; ++dr) {
                        const int rr = r + dr - off;
                        if (rr < 0 || rr >= n) continue;
                        for (int dc = 0; dc < kernel; ++dc) {
                            const int cc = c + dc - off;
                            if (cc < 0 || cc >= n) continue;
                            dwk[dr * kernel + dc] += g * img[rr * n + cc];
                            if (dimg) dimg[rr * n + cc] += g * wk[dr * kernel + dc];
                        }
                    }
                }
            }
        }
    }
}

inline std::vector<double> window_of(const ImageGrid& g) {
    const int n = g.inner_dim;
    std::vector<double> w(static_cast<size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) w[static_cast<size_t>(r) * n + c] = g.at(r, c);
    return w;
}

inline ImageGrid embed_window(const std::vector<double>& w, const ImageGrid& frame_template) {
    ImageGrid out = like(frame_template);
    const int n = out.inner_dim;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out.at(r, c) = w[static_cast<size_t>(r) * n + c];
    return out;
}

inline DenoiserTape denoiser_forward(const DenoiserModel& model, const ImageGrid& x_t,
                                     int t_index, const std::vector<ImageGrid>& inits) {
    if (static_cast<int>(inits.size()) != model.k)
        throw std::invalid_argument("denoise: expected " + std::to_string(model.k) + " crude estimates");
    const DenoiserArch& arch = model.arch;
    const ParamLayout layout(arch);
    if (model.params.size() != layout.total)
        throw std::invalid_argument("denoise: parameter vector does not match arch");
    const int n = x_t.inner_dim;
    const int e = arch.timestep_embed_dim;
    const double* p = model.params.data();

    DenoiserTape tape;
    tape.n = n;
    tape.inputs.push_back(window_of(x_t));
    for (const ImageGrid& g : inits) {
        if (!g.same_shape(x_t)) throw std::invalid_argument("denoise: dimension mismatch");
        tape.inputs.push_back(window_of(g));
    }

    tape.embed_raw = timestep_embedding(t_index, e);
    tape.embed.assign(e, 0.0);
    for (int i = 0; i < e; ++i) {
        double acc = p[layout.embed_b + i];
        for (int j = 0; j < e; ++j) acc += p[layout.embed_w + static_cast<size_t>(i) * e + j] * tape.embed_raw[j];
        tape.embed[i] = acc;
    }

    // flatten channel stack
    std::vector<double> current(static_cast<size_t>(arch.input_channels) * n * n);
    for (int ch = 0; ch < arch.input_channels; ++ch)
        std::copy(tape.inputs[ch].begin(), tape.inputs[ch].end(),
                  current.begin() + static_cast<size_t>(ch) * n * n);

    for (int l = 0; l < arch.layers; ++l) {
        std::vector<double> conv;
        conv2d(p + layout.conv_w[l], p + layout.conv_b[l], current, arch.in_channels_of(l),
               arch.out_channels_of(l), n, arch.kernel_size, conv);
        tape.conv_out.push_back(conv);
        if (l == arch.layers - 1) {
            tape.residual_window = std::move(conv);
            break;
        }
        const int c_out = arch.out_channels_of(l);
        std::vector<double> film(conv.size());
        for (int ch = 0; ch < c_out; ++ch) {
            double gamma = 1.0 + p[layout.film_bg[l] + ch];
            double beta = p[layout.film_bb[l] + ch];
            for (int j = 0; j < e; ++j) {
                gamma += p[layout.film_wg[l] + static_cast<size_t>(ch) * e + j] * tape.embed[j];
                beta += p[layout.film_wb[l] + static_cast<size_t>(ch) * e + j] * tape.embed[j];
            }
            const double* src = conv.data() + static_cast<size_t>(ch) * n * n;
            double* dst = film.data() + static_cast<size_t>(ch) * n * n;
            for (int px = 0; px < n * n; ++px) dst[px] = gamma * src[px] + beta;
        }
        tape.film_out.push_back(film);
        std::vector<double> act(film.size());
        for (size_t i = 0; i < film.size(); ++i) act[i] = silu(film[i]);
        tape.act.push_back(act);
        current = std::move(act);
    }

    tape.out_window.assign(static_cast<size_t>(n) * n, 0.0);
    for (int ch = 0; ch < arch.input_channels; ++ch)
        for (size_t i = 0; i < tape.out_window.size(); ++i)
            tape.out_window[i] += tape.inputs[ch][i] / arch.input_channels;
    for (size_t i = 0; i < tape.out_window.size(); ++i)
        tape.out_window[i] -= tape.residual_window[i];
    for (double v : tape.out_window)
        if (!std::isfinite(v)) throw std::runtime_error("denoise: non-finite activation in output");
    return tape;
}

// Backprop from d(loss)/d(out_window) into the parameter gradient.
inline void denoiser_backward(const DenoiserModel& model, const DenoiserTape& tape,
                              const std::vector<double>& dout, std::vector<double>& grad) {
    const DenoiserArch& arch = model.arch;
    const ParamLayout layout(arch);
    const int n = tape.n;
    const int e = arch.timestep_embed_dim;
    const double* p = model.params.data();

    // out = mean(inputs) - residual
    std::vector<double> dres(dout.size());
    for (size_t i = 0; i < dout.size(); ++i) dres[i] = -dout[i];

    std::vector<double> dembed(e, 0.0);
    std::vector<double> dcurrent = dres; // gradient flowing into conv output of layer l
    for (int l = arch.layers - 1; l >= 0; --l) {
        std::vector<double> dconv;
        if (l == arch.layers - 1) {
            dconv = std::move(dcurrent);
        } else {
            // through SiLU then FiLM
            const std::vector<double>& film = tape.film_out[l];
            std::vector<double> dfilm(film.size());
            for (size_t i = 0; i < film.size(); ++i) dfilm[i] = dcurrent[i] * silu_grad(film[i]);
            const int c_out = arch.out_channels_of(l);
            dconv.assign(dfilm.size(), 0.0);
            const std::vector<double>& conv = tape.conv_out[l];
            for (int ch = 0; ch < c_out; ++ch) {
                double gamma = 1.0 + p[layout.film_bg[l] + ch];
                for (int j = 0; j < e; ++j)
                    gamma += p[layout.film_wg[l] + static_cast<size_t>(ch) * e + j] * tape.embed[j];
                const double* df = dfilm.data() + static_cast<size_t>(ch) * n * n;
                const double* cv = conv.data() + static_cast<size_t>(ch) * n * n;
                double* dc = dconv.data() + static_cast<size_t>(ch) * n * n;
                double dgamma = 0.0, dbeta = 0.0;
                for (int px = 0; px < n * n; ++px) {
                    dc[px] = gamma * df[px];
                    dgamma += df[px] * cv[px];
                    dbeta += df[px];
                }
                grad[layout.film_bg[l] + ch] += dgamma;
                grad[layout.film_bb[l] + ch] += dbeta;
                for (int j = 0; j < e; ++j) {
                    grad[layout.film_wg[l] + static_cast<size_t>(ch) * e + j] += dgamma * tape.embed[j];
                    grad[layout.film_wb[l] + static_cast<size_t>(ch) * e + j] += dbeta * tape.embed[j];
                    dembed[j] += dgamma * p[layout.film_wg[l] + static_cast<size_t>(ch) * e + j] +
                                 dbeta * p[layout.film_wb[l] + static_cast<size_t>(ch) * e + j];
                }
            }
        }

        // conv input for layer l
        std::vector<double> input;
        if (l == 0) {
            input.resize(static_cast<size_t>(arch.input_channels) * n * n);
            for (int ch = 0; ch < arch.input_channels; ++ch)
                std::copy(tape.inputs[ch].begin(), tape.inputs[ch].end(),
                          input.begin() + static_cast<size_t>(ch) * n * n);
        } else {
            input = tape.act[l - 1];
        }
        std::vector<double> din;
        conv2d_backward(p + layout.conv_w[l], input, dconv, arch.in_channels_of(l),
                        arch.out_channels_of(l), n, arch.kernel_size,
                        grad.data() + layout.conv_w[l], grad.data() + layout.conv_b[l],
                        l > 0 ? &din : nullptr);
        if (l > 0) dcurrent = std::move(din);
    }

    // embedding affine
    for (int i = 0; i < e; ++i) {
        grad[layout.embed_b + i] += dembed[i];
        for (int j = 0; j < e; ++j)
            grad[layout.embed_w + static_cast<size_t>(i) * e + j] += dembed[i] * tape.embed_raw[j];
    }
}

} // namespace detail

// Denoised estimate: mean of the k+1 inputs minus the predicted residual.
inline ImageGrid denoise(const DenoiserModel& model, const ImageGrid& x_t, int t_index,
                         const std::vector<ImageGrid>& inits) {
    detail::DenoiserTape tape = detail::denoiser_forward(model, x_t, t_index, inits);
    return detail::embed_window(tape.out_window, x_t);
}

// Mean squared pixel error over the batch plus its exact analytic gradient.
inline std::pair<double, std::vector<double>> loss_and_grad(const DenoiserModel& model,
                                                            const std::vector<DegradationSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    std::vector<double> grad(model.params.size(), 0.0);
    double loss = 0.0;
    for (const DegradationSample& sample : batch) {
        detail::DenoiserTape tape = detail::denoiser_forward(model, sample.x_t, sample.t_index, sample.inits);
        const std::vector<double> target = detail::window_of(sample.target);
        const size_t npix = target.size();
        std::vector<double> dout(npix);
        for (size_t i = 0; i < npix; ++i) {
            const double d = tape.out_window[i] - target[i];
            loss += d * d / (static_cast<double>(npix) * batch.size());
            dout[i] = 2.0 * d / (static_cast<double>(npix) * batch.size());
        }
        detail::denoiser_backward(model, tape, dout, grad);
    }
    return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Model persistence: magic I2DN, u32 version, arch fields, u32 param_count,
// then param_count little-endian f64 values.
// ---------------------------------------------------------------------------

inline void write_i2dn(const std::string& path, const DenoiserModel& m) {
    io::atomic_write(path, [&](std::ostream& os) {
        os.write("I2DN", 4);
        io::write_u32(os, 1);
        io::write_u32(os, static_cast<uint32_t>(m.arch.input_channels));
        io::write_u32(os, static_cast<uint32_t>(m.arch.hidden_channels));
        io::write_u32(os, static_cast<uint32_t>(m.arch.layers));
        io::write_u32(os, static_cast<uint32_t>(m.arch.kernel_size));
        io::write_u32(os, static_cast<uint32_t>(m.arch.timestep_embed_dim));
        io::write_u32(os, static_cast<uint32_t>(m.k));
        io::write_u32(os, static_cast<uint32_t>(m.trained_T));
        io::write_u32(os, static_cast<uint32_t>(m.params.size()));
        for (double v : m.params) io::write_f64(os, v);
    });
}

inline DenoiserModel read_i2dn(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    io::expect_magic(is, "I2DN");
    if (io::read_u32(is) != 1) throw std::runtime_error("unsupported I2DN version");
    DenoiserModel m;
    m.arch.input_channels = static_cast<int>(io::read_u32(is));
    m.arch.hidden_channels = static_cast<int>(io::read_u32(is));
    m.arch.layers = static_cast<int>(io::read_u32(is));
    m.arch.kernel_size = static_cast<int>(io::read_u32(is));
    m.arch.timestep_embed_dim = static_cast<int>(io::read_u32(is));
    m.k = static_cast<int>(io::read_u32(is));
    m.trained_T = static_cast<int>(io::read_u32(is));
    const uint32_t count = io::read_u32(is);
    if (count != ParamLayout(m.arch).total)
        throw std::runtime_error("I2DN parameter count does not match arch");
    m.params.resize(count);
    for (double& v : m.params) v = io::read_f64(is);
    if (!is) throw std::runtime_error("truncated I2DN: " + path);
    return m;
}

} // namespace i2ipr
