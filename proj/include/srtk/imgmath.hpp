#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/fft.hpp"

namespace srtk::imgmath {

// ---------------------------------------------------------------------------
// sRGB <-> CIELAB (D65, 2-degree observer)
// ---------------------------------------------------------------------------

namespace color {

// sRGB -> linear RGB matrix rows sum exactly to the D65 white point, so
// neutral grays map to a* = b* = 0 without rounding debt.
inline constexpr double kXn = 0.4124564 + 0.3575761 + 0.1804375;
inline constexpr double kYn = 0.2126729 + 0.7151522 + 0.0721750;
inline constexpr double kZn = 0.0193339 + 0.1191920 + 0.9503041;

inline constexpr std::array<std::array<double, 3>, 3> kRgbToXyz = {{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

inline double srgb_eotf(double s) {
    return s <= 0.04045 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
}

inline double srgb_eotf_deriv(double s) {
    if (s <= 0.04045) return 1.0 / 12.92;
    return 2.4 / 1.055 * std::pow((s + 0.055) / 1.055, 1.4);
}

inline double srgb_oetf(double lin) {
    return lin <= 0.0031308 ? 12.92 * lin
                            : 1.055 * std::pow(lin, 1.0 / 2.4) - 0.055;
}

inline constexpr double kLabDelta = 6.0 / 29.0;
inline constexpr double kLabDelta3 = kLabDelta * kLabDelta * kLabDelta;

inline double lab_f(double t) {
    return t > kLabDelta3 ? std::cbrt(t)
                          : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

inline double lab_f_deriv(double t) {
    if (t > kLabDelta3) {
        const double c = std::cbrt(t);
        return 1.0 / (3.0 * c * c);
    }
    return 1.0 / (3.0 * kLabDelta * kLabDelta);
}

inline double lab_f_inv(double f) {
    return f > kLabDelta ? f * f * f
                         : 3.0 * kLabDelta * kLabDelta * (f - 4.0 / 29.0);
}

inline void srgb_pixel_to_lab(const double rgb[3], double lab[3]) {
    double lin[3];
    for (int i = 0; i < 3; ++i) lin[i] = srgb_eotf(rgb[i]);
    const double x = kRgbToXyz[0][0] * lin[0] + kRgbToXyz[0][1] * lin[1] + kRgbToXyz[0][2] * lin[2];
    const double y = kRgbToXyz[1][0] * lin[0] + kRgbToXyz[1][1] * lin[1] + kRgbToXyz[1][2] * lin[2];
    const double z = kRgbToXyz[2][0] * lin[0] + kRgbToXyz[2][1] * lin[1] + kRgbToXyz[2][2] * lin[2];
    const double fx = lab_f(x / kXn), fy = lab_f(y / kYn), fz = lab_f(z / kZn);
    lab[0] = 116.0 * fy - 16.0;
    lab[1] = 500.0 * (fx - fy);
    lab[2] = 200.0 * (fy - fz);
}

// exact adjugate inverse of kRgbToXyz, so the round trip closes tightly
inline const std::array<std::array<double, 3>, 3>& xyz_to_rgb_matrix() {
    static const auto inv = [] {
        const auto& m = kRgbToXyz;
        const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        std::array<std::array<double, 3>, 3> r;
        r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
        r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
        r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
        r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
        r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
        r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
        r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
        r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
        return r;
    }();
    return inv;
}

inline void lab_pixel_to_srgb(const double lab[3], double rgb[3]) {
    const double fy = (lab[0] + 16.0) / 116.0;
    const double fx = fy + lab[1] / 500.0;
    const double fz = fy - lab[2] / 200.0;
    const double x = kXn * lab_f_inv(fx);
    const double y = kYn * lab_f_inv(fy);
    const double z = kZn * lab_f_inv(fz);
    const auto& inv = xyz_to_rgb_matrix();
    for (int i = 0; i < 3; ++i)
        rgb[i] = srgb_oetf(inv[i][0] * x + inv[i][1] * y + inv[i][2] * z);
}

// d(L,a,b)/d(r,g,b) at one sRGB pixel, row-major 3x3.
inline void lab_jacobian(const double rgb[3], double jac[3][3]) {
    double lin[3], dlin[3];
    for (int i = 0; i < 3; ++i) {
        lin[i] = srgb_eotf(rgb[i]);
        dlin[i] = srgb_eotf_deriv(rgb[i]);
    }
    const double x = kRgbToXyz[0][0] * lin[0] + kRgbToXyz[0][1] * lin[1] + kRgbToXyz[0][2] * lin[2];
    const double y = kRgbToXyz[1][0] * lin[0] + kRgbToXyz[1][1] * lin[1] + kRgbToXyz[1][2] * lin[2];
    const double z = kRgbToXyz[2][0] * lin[0] + kRgbToXyz[2][1] * lin[1] + kRgbToXyz[2][2] * lin[2];
    const double dfx = lab_f_deriv(x / kXn) / kXn;
    const double dfy = lab_f_deriv(y / kYn) / kYn;
    const double dfz = lab_f_deriv(z / kZn) / kZn;
    for (int j = 0; j < 3; ++j) {
        const double dx = kRgbToXyz[0][j] * dlin[j] * dfx;
        const double dy = kRgbToXyz[1][j] * dlin[j] * dfy;
        const double dz = kRgbToXyz[2][j] * dlin[j] * dfz;
        jac[0][j] = 116.0 * dy;
        jac[1][j] = 500.0 * (dx - dy);
        jac[2][j] = 200.0 * (dy - dz);
    }
}

}  // namespace color

inline ImageTensor srgb_to_lab(const ImageTensor& img) {
    if (img.channels != 3)
        throw DomainError("srgb_to_lab: expected 3 channels, got " +
                          std::to_string(img.channels));
    if (img.domain != Domain::Unit)
        throw DomainError("srgb_to_lab: expected unit-domain input");
    ImageTensor out(img.height, img.width, 3, Domain::Lab);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double rgb[3] = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
            double lab[3];
            color::srgb_pixel_to_lab(rgb, lab);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = lab[c];
        }
    return out;
}

inline ImageTensor lab_to_srgb(const ImageTensor& img) {
    if (img.channels != 3 || img.domain != Domain::Lab)
        throw DomainError("lab_to_srgb: expected lab-domain 3-channel input");
    ImageTensor out(img.height, img.width, 3, Domain::Unit);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double lab[3] = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
            double rgb[3];
            color::lab_pixel_to_srgb(lab, rgb);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = std::clamp(rgb[c], 0.0, 1.0);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur (separable, reflect padding)
// ---------------------------------------------------------------------------

struct GaussianKernel {
    double sigma = 1.0;
    int radius = 3;
    std::vector<double> weights;  // length 2*radius+1, sums to 1

    static GaussianKernel make(double sigma, int radius = -1) {
        if (!(sigma > 0.0)) throw DomainError("gaussian kernel: sigma must be positive");
        GaussianKernel k;
        k.sigma = sigma;
        k.radius = radius > 0 ? radius : static_cast<int>(std::ceil(3.0 * sigma));
        if (k.radius < static_cast<int>(std::ceil(3.0 * sigma)))
            throw DomainError("gaussian kernel: radius below 3*sigma");
        k.weights.resize(2 * k.radius + 1);
        double sum = 0.0;
        for (int i = -k.radius; i <= k.radius; ++i) {
            const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
            k.weights[i + k.radius] = w;
            sum += w;
        }
        for (double& w : k.weights) w /= sum;
        return k;
    }
};

// Mirror with edge repetition: ... x1 x0 | x0 x1 ... xn-1 | xn-1 xn-2 ...
// This convention makes a normalized symmetric blur preserve the image mean.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

namespace detail {

enum class PassDir { Horizontal, Vertical };

inline void blur_pass(const ImageTensor& src, ImageTensor& dst,
                      const GaussianKernel& k, PassDir dir, bool adjoint) {
    const int h = src.height, w = src.width, c = src.channels, r = k.radius;
    std::fill(dst.data.begin(), dst.data.end(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const double v = src.at(y, x, ch);
                if (adjoint) {
                    // scatter: exact transpose of the gather below
                    for (int t = -r; t <= r; ++t) {
                        const int yy = dir == PassDir::Vertical ? reflect_index(y + t, h) : y;
                        const int xx = dir == PassDir::Horizontal ? reflect_index(x + t, w) : x;
                        dst.at(yy, xx, ch) += k.weights[t + r] * v;
                    }
                } else {
                    double acc = 0.0;
                    for (int t = -r; t <= r; ++t) {
                        const int yy = dir == PassDir::Vertical ? reflect_index(y + t, h) : y;
                        const int xx = dir == PassDir::Horizontal ? reflect_index(x + t, w) : x;
                        acc += k.weights[t + r] * src.at(yy, xx, ch);
                    }
                    dst.at(y, x, ch) = acc;
                }
            }
}

}  // namespace detail

inline ImageTensor gaussian_blur(const ImageTensor& img, const GaussianKernel& k) {
    ImageTensor tmp(img.height, img.width, img.channels, img.domain);
    ImageTensor out(img.height, img.width, img.channels, img.domain);
    detail::blur_pass(img, tmp, k, detail::PassDir::Horizontal, false);
    detail::blur_pass(tmp, out, k, detail::PassDir::Vertical, false);
    return out;
}

// Exact adjoint of gaussian_blur under the reflect convention; used to
// backpropagate through the blur in the color loss.
inline ImageTensor gaussian_blur_adjoint(const ImageTensor& img, const GaussianKernel& k) {
    ImageTensor tmp(img.height, img.width, img.channels, img.domain);
    ImageTensor out(img.height, img.width, img.channels, img.domain);
    detail::blur_pass(img, tmp, k, detail::PassDir::Vertical, true);
    detail::blur_pass(tmp, out, k, detail::PassDir::Horizontal, true);
    return out;
}

// ---------------------------------------------------------------------------
// Scharr gradient magnitude
// ---------------------------------------------------------------------------

// Scharr operator normalized to unit response on a unit-slope ramp:
// smoothing taps [3,10,3]/16 across, derivative taps [-1,0,1]/2 along.
inline ImageTensor gradient_magnitude(const ImageTensor& img) {
    if (img.channels != 1)
        throw DomainError("gradient_magnitude: expected single channel, got " +
                          std::to_string(img.channels));
    const int h = img.height, w = img.width;
    static constexpr double ks[3] = {3.0 / 16.0, 10.0 / 16.0, 3.0 / 16.0};
    static constexpr double kd[3] = {-0.5, 0.0, 0.5};
    ImageTensor out(h, w, 1, img.domain);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = 0.0, gy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v = img.at(reflect_index(y + dy, h), reflect_index(x + dx, w), 0);
                    gx += ks[dy + 1] * kd[dx + 1] * v;
                    gy += kd[dy + 1] * ks[dx + 1] * v;
                }
            out.at(y, x, 0) = std::hypot(gx, gy);
        }
    return out;
}

// ---------------------------------------------------------------------------
// 2-D DFT magnitude
// ---------------------------------------------------------------------------

inline ImageTensor dft2_magnitude(const ImageTensor& img) {
    ImageTensor out(img.height, img.width, img.channels, Domain::Latent);
    for (int c = 0; c < img.channels; ++c) {
        auto buf = fft::forward_channel(img, c);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, x, c) = std::abs(buf[static_cast<std::size_t>(y) * img.width + x]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Percentile (linear interpolation, inclusive endpoints)
// ---------------------------------------------------------------------------

inline double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw EmptyInput("percentile: empty input");
    if (!(p >= 0.0 && p <= 100.0))
        throw DomainError("percentile: p outside [0,100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// ---------------------------------------------------------------------------
// Bicubic resampling (Catmull-Rom)
// ---------------------------------------------------------------------------

namespace detail {

// Catmull-Rom weights for the four taps around a sample at fractional
// offset t in [0,1) from tap index 0.
inline void catmull_rom_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

}  // namespace detail

inline ImageTensor resize_bicubic(const ImageTensor& img, double factor) {
    if (!(factor > 0.0)) throw DomainError("resize_bicubic: factor must be positive");
    const int oh = std::max(1, static_cast<int>(std::lround(img.height * factor)));
    const int ow = std::max(1, static_cast<int>(std::lround(img.width * factor)));
    ImageTensor out(oh, ow, img.channels, img.domain);
    const double sy = static_cast<double>(img.height) / oh;
    const double sx = static_cast<double>(img.width) / ow;
    for (int y = 0; y < oh; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y));
        double wy[4];
        detail::catmull_rom_weights(src_y - y0, wy);
        for (int x = 0; x < ow; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            double wx[4];
            detail::catmull_rom_weights(src_x - x0, wx);
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j) {
                    const int yy = std::clamp(y0 - 1 + j, 0, img.height - 1);
                    for (int i = 0; i < 4; ++i) {
                        const int xx = std::clamp(x0 - 1 + i, 0, img.width - 1);
                        acc += wy[j] * wx[i] * img.at(yy, xx, c);
                    }
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Small reductions shared across modules
// ---------------------------------------------------------------------------

inline double mean(const ImageTensor& img) {
    double s = 0.0;
    for (double v : img.data) s += v;
    return s / static_cast<double>(img.size());
}

// Rec.709 luma projection; non-RGB inputs fall back to the channel mean.
inline ImageTensor luminance(const ImageTensor& img) {
    if (img.channels == 1) return img;
    ImageTensor out(img.height, img.width, 1, img.domain);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double v;
            if (img.channels == 3) {
                v = 0.2126 * img.at(y, x, 0) + 0.7152 * img.at(y, x, 1) +
                    0.0722 * img.at(y, x, 2);
            } else {
                v = 0.0;
                for (int c = 0; c < img.channels; ++c) v += img.at(y, x, c);
                v /= img.channels;
            }
            out.at(y, x, 0) = v;
        }
    return out;
}

}  // namespace srtk::imgmath
