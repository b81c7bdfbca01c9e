#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "srtk/core.hpp"

namespace srtk::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey. n must be a power of two.
inline void fft_radix2(cplx* a, std::size_t n, bool inverse) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang =
            (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Direct O(n^2) transform for sizes that are not powers of two.
inline void dft_direct(cplx* a, std::size_t n, bool inverse) {
    std::vector<cplx> out(n);
    const double sgn = inverse ? 2.0 : -2.0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            const double ang = sgn * std::numbers::pi *
                               static_cast<double>((k * x) % n) / static_cast<double>(n);
            acc += a[x] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    for (std::size_t k = 0; k < n; ++k) a[k] = out[k];
}

// Unnormalized forward transform; inverse carries the 1/n factor.
inline void transform_1d(cplx* a, std::size_t n, bool inverse) {
    if (n == 1) return;
    if (is_pow2(n))
        fft_radix2(a, n, inverse);
    else
        dft_direct(a, n, inverse);
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= s;
    }
}

// 2-D transform of a row-major h x w buffer, rows first then columns.
inline void transform_2d(std::vector<cplx>& buf, int h, int w, bool inverse) {
    if (buf.size() != static_cast<std::size_t>(h) * w)
        throw ShapeError("transform_2d: buffer size mismatch");
    for (int y = 0; y < h; ++y)
        transform_1d(buf.data() + static_cast<std::size_t>(y) * w, w, inverse);
    std::vector<cplx> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = buf[static_cast<std::size_t>(y) * w + x];
        transform_1d(col.data(), h, inverse);
        for (int y = 0; y < h; ++y) buf[static_cast<std::size_t>(y) * w + x] = col[y];
    }
}

// Forward 2-D DFT of one channel of a real image, DC at index (0,0).
inline std::vector<cplx> forward_channel(const ImageTensor& img, int c) {
    std::vector<cplx> buf(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            buf[static_cast<std::size_t>(y) * img.width + x] = cplx(img.at(y, x, c), 0.0);
    transform_2d(buf, img.height, img.width, false);
    return buf;
}

}  // namespace srtk::fft
