#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "grid.hpp"

namespace i2ipr {

namespace io {

inline void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

inline uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
inline double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

inline void expect_magic(std::istream& is, const char* magic) {
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

// Atomic write: stream into a temp file, then rename over the target.
template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& fn) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp);
        fn(os);
        if (!os) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace io

// Raw image format: magic IGRD, u32 N, u32 P, then P^2 little-endian f64
// values in row-major order.
inline void write_igrd(const std::string& path, const ImageGrid& g) {
    io::atomic_write(path, [&](std::ostream& os) {
        os.write("IGRD", 4);
        io::write_u32(os, static_cast<uint32_t>(g.inner_dim));
        io::write_u32(os, static_cast<uint32_t>(g.padded_dim));
        for (double v : g.values) io::write_f64(os, v);
    });
}

inline ImageGrid read_igrd(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    io::expect_magic(is, "IGRD");
    const uint32_t n = io::read_u32(is);
    const uint32_t p = io::read_u32(is);
    ImageGrid g = ImageGrid::zeros(static_cast<int>(n), static_cast<int>(p));
    for (double& v : g.values) v = io::read_f64(is);
    if (!is) throw std::runtime_error("truncated IGRD: " + path);
    return g;
}

// Measurement format: magic I2IM, u32 version = 1, u32 P, f64 alpha, u64 seed,
// then P^2 little-endian f64 magnitudes in row-major order.
inline void write_i2im(const std::string& path, const MagnitudeMeasurements& m) {
    io::atomic_write(path, [&](std::ostream& os) {
        os.write("I2IM", 4);
        io::write_u32(os, 1);
        io::write_u32(os, static_cast<uint32_t>(m.padded_dim));
        io::write_f64(os, m.alpha);
        io::write_u64(os, m.seed);
        for (double v : m.magnitudes) io::write_f64(os, v);
    });
}

inline MagnitudeMeasurements read_i2im(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    io::expect_magic(is, "I2IM");
    const uint32_t version = io::read_u32(is);
    if (version != 1) throw std::runtime_error("unsupported I2IM version");
    MagnitudeMeasurements m;
    m.padded_dim = static_cast<int>(io::read_u32(is));
    m.alpha = io::read_f64(is);
    m.seed = io::read_u64(is);
    m.magnitudes.resize(static_cast<size_t>(m.padded_dim) * m.padded_dim);
    for (double& v : m.magnitudes) v = io::read_f64(is);
    if (!is) throw std::runtime_error("truncated I2IM: " + path);
    return m;
}

// 8-bit binary PGM (P5) of the N x N support window; [0,255] maps to [0,1].
inline void write_pgm(const std::string& path, const ImageGrid& g) {
    io::atomic_write(path, [&](std::ostream& os) {
        const int n = g.inner_dim;
        os << "P5\n" << n << " " << n << "\n255\n";
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                // round half away from zero, clamp to [0, 255]
                double v = g.at(r, c) * 255.0;
                v = std::floor(std::abs(v) + 0.5) * (v < 0 ? -1.0 : 1.0);
                const int q = static_cast<int>(std::clamp(v, 0.0, 255.0));
                os.put(static_cast<char>(q));
            }
    });
}

inline ImageGrid read_pgm(const std::string& path, int padded_dim = 0) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path);
    int w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    is.get(); // single whitespace before raster
    if (w != h) throw std::runtime_error("PGM must be square: " + path);
    if (maxval != 255) throw std::runtime_error("PGM must be 8-bit: " + path);
    ImageGrid g = ImageGrid::zeros(w, padded_dim);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int v = is.get();
            if (v < 0) throw std::runtime_error("truncated PGM: " + path);
            g.at(r, c) = v / 255.0;
        }
    return g;
}

// Trace export: iter,residual lines.
inline void write_trace_csv(const std::string& path, const std::vector<double>& residuals) {
    io::atomic_write(path, [&](std::ostream& os) {
        os << "iter,residual\n";
        for (size_t i = 0; i < residuals.size(); ++i) os << (i + 1) << "," << residuals[i] << "\n";
    });
}

} // namespace i2ipr
