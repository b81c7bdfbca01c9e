// Independent brute-force transcriptions used to cross-check the library.
// Everything here recomputes results from first principles (direct loops,
// naive DFTs, plain Gaussian elimination) without touching the library's
// computational paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/linalg.hpp"

namespace oracles {

using srtk::ImageTensor;

// ---------------------------------------------------------------------------
// random test data
// ---------------------------------------------------------------------------

inline ImageTensor random_image(std::mt19937_64& rng, int h, int w, int c,
                                srtk::Domain domain = srtk::Domain::Unit,
                                double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ImageTensor img(h, w, c, domain);
    for (double& v : img.data) v = dist(rng);
    return img;
}

// ---------------------------------------------------------------------------
// naive 2-D DFT
// ---------------------------------------------------------------------------

inline std::vector<std::complex<double>> naive_dft2(const ImageTensor& img, int ch) {
    const int h = img.height, w = img.width;
    std::vector<std::complex<double>> out(static_cast<std::size_t>(h) * w);
    for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l) {
            std::complex<double> acc(0.0, 0.0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(k) * y / h +
                                        static_cast<double>(l) * x / w);
                    acc += img.at(y, x, ch) *
                           std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<std::size_t>(k) * w + l] = acc;
        }
    return out;
}

inline double radial_weight_at(int k, int l, int h, int w, double gamma) {
    if (gamma == 0.0) return 1.0;
    const double fk = std::min(k, h - k);
    const double fl = std::min(l, w - l);
    const double rho = std::sqrt(fk * fk + fl * fl);
    const double rho_max = std::sqrt(static_cast<double>(h / 2) * (h / 2) +
                                     static_cast<double>(w / 2) * (w / 2));
    return rho_max > 0.0 ? std::pow(rho / rho_max, gamma) : 0.0;
}

inline double fft_loss(const ImageTensor& pred, const ImageTensor& target,
                       double gamma) {
    const int h = pred.height, w = pred.width;
    double total = 0.0;
    for (int c = 0; c < pred.channels; ++c) {
        const auto fp = naive_dft2(pred, c);
        const auto ft = naive_dft2(target, c);
        double chan = 0.0;
        for (int k = 0; k < h; ++k)
            for (int l = 0; l < w; ++l) {
                const std::size_t i = static_cast<std::size_t>(k) * w + l;
                chan += radial_weight_at(k, l, h, w, gamma) *
                        std::abs(std::abs(fp[i]) - std::abs(ft[i]));
            }
        total += chan / (static_cast<double>(h) * w);
    }
    return total / pred.channels;
}

// ---------------------------------------------------------------------------
// pixel metrics
// ---------------------------------------------------------------------------

inline double psnr(const ImageTensor& a, const ImageTensor& b, double peak) {
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        mse += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    mse /= static_cast<double>(a.data.size());
    return 10.0 * std::log10(peak * peak / mse);
}

inline double sam_degrees(const ImageTensor& a, const ImageTensor& b) {
    double acc = 0.0;
    std::size_t used = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            double dot = 0, na = 0, nb = 0;
            for (int c = 0; c < a.channels; ++c) {
                dot += a.at(y, x, c) * b.at(y, x, c);
                na += a.at(y, x, c) * a.at(y, x, c);
                nb += b.at(y, x, c) * b.at(y, x, c);
            }
            if (na == 0 || nb == 0) continue;
            acc += std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
            ++used;
        }
    return acc / static_cast<double>(used) * 180.0 / std::numbers::pi;
}

// Direct per-window SSIM with an explicit 2-D Gaussian window; the library
// uses separable filtering, this does not.
inline double ssim(const ImageTensor& x1, const ImageTensor& y1, int win,
                   double sigma, double k1, double k2, double peak) {
    auto lum = [](const ImageTensor& im, int y, int x) {
        if (im.channels == 1) return im.at(y, x, 0);
        return 0.2126 * im.at(y, x, 0) + 0.7152 * im.at(y, x, 1) +
               0.0722 * im.at(y, x, 2);
    };
    std::vector<std::vector<double>> w(win, std::vector<double>(win));
    const double ctr = (win - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            w[i][j] = std::exp(-((i - ctr) * (i - ctr) + (j - ctr) * (j - ctr)) /
                               (2.0 * sigma * sigma));
            sum += w[i][j];
        }
    for (auto& row : w)
        for (double& v : row) v /= sum;

    const double c1 = (k1 * peak) * (k1 * peak);
    const double c2 = (k2 * peak) * (k2 * peak);
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= x1.height; ++y0)
        for (int x0 = 0; x0 + win <= x1.width; ++x0) {
            double mx = 0, my = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    mx += w[i][j] * lum(x1, y0 + i, x0 + j);
                    my += w[i][j] * lum(y1, y0 + i, x0 + j);
                }
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double dx = lum(x1, y0 + i, x0 + j) - mx;
                    const double dy = lum(y1, y0 + i, x0 + j) - my;
                    vx += w[i][j] * dx * dx;
                    vy += w[i][j] * dy * dy;
                    cxy += w[i][j] * dx * dy;
                }
            acc += (2 * mx * my + c1) * (2 * cxy + c2) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / count;
}

// ---------------------------------------------------------------------------
// CIEDE2000, transcribed in radians
// ---------------------------------------------------------------------------

inline double ciede2000(double l1, double a1, double b1, double l2, double a2,
                        double b2) {
    constexpr double pi = std::numbers::pi;
    const double c1 = std::sqrt(a1 * a1 + b1 * b1);
    const double c2 = std::sqrt(a2 * a2 + b2 * b2);
    const double cm = 0.5 * (c1 + c2);
    const double cm7 = std::pow(cm, 7.0);
    const double p25 = std::pow(25.0, 7.0);
    const double g = 0.5 * (1.0 - std::sqrt(cm7 / (cm7 + p25)));
    const double a1p = (1.0 + g) * a1, a2p = (1.0 + g) * a2;
    const double c1p = std::sqrt(a1p * a1p + b1 * b1);
    const double c2p = std::sqrt(a2p * a2p + b2 * b2);
    auto hue = [pi](double ap, double b) {
        if (ap == 0.0 && b == 0.0) return 0.0;
        const double h = std::atan2(b, ap);
        return h < 0.0 ? h + 2.0 * pi : h;
    };
    const double h1 = hue(a1p, b1), h2 = hue(a2p, b2);
    const double dl = l2 - l1, dc = c2p - c1p;
    double dh = 0.0;
    if (c1p * c2p != 0.0) {
        dh = h2 - h1;
        if (dh > pi) dh -= 2.0 * pi;
        if (dh < -pi) dh += 2.0 * pi;
    }
    const double dbigh = 2.0 * std::sqrt(c1p * c2p) * std::sin(0.5 * dh);
    const double lm = 0.5 * (l1 + l2), cmp = 0.5 * (c1p + c2p);
    double hm;
    if (c1p * c2p == 0.0)
        hm = h1 + h2;
    else if (std::abs(h1 - h2) <= pi)
        hm = 0.5 * (h1 + h2);
    else if (h1 + h2 < 2.0 * pi)
        hm = 0.5 * (h1 + h2) + pi;
    else
        hm = 0.5 * (h1 + h2) - pi;
    const double t = 1.0 - 0.17 * std::cos(hm - pi / 6.0) + 0.24 * std::cos(2.0 * hm) +
                     0.32 * std::cos(3.0 * hm + 6.0 * pi / 180.0) -
                     0.20 * std::cos(4.0 * hm - 63.0 * pi / 180.0);
    const double dtheta =
        (pi / 6.0) * std::exp(-std::pow((hm - 275.0 * pi / 180.0) / (25.0 * pi / 180.0), 2.0));
    const double cmp7 = std::pow(cmp, 7.0);
    const double rc = 2.0 * std::sqrt(cmp7 / (cmp7 + p25));
    const double sl =
        1.0 + 0.015 * (lm - 50.0) * (lm - 50.0) / std::sqrt(20.0 + (lm - 50.0) * (lm - 50.0));
    const double sc = 1.0 + 0.045 * cmp;
    const double sh = 1.0 + 0.015 * cmp * t;
    const double rt = -std::sin(2.0 * dtheta) * rc;
    const double tl = dl / sl, tc = dc / sc, th = dbigh / sh;
    return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

// ---------------------------------------------------------------------------
// QNR: direct sliding-window transcription
// ---------------------------------------------------------------------------

inline double q_index(const std::vector<double>& a, const std::vector<double>& b,
                      int h, int w, int win) {
    double acc = 0.0;
    int count = 0;
    const double n = static_cast<double>(win) * win;
    for (int y0 = 0; y0 + win <= h; ++y0)
        for (int x0 = 0; x0 + win <= w; ++x0) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = y0; y < y0 + win; ++y)
                for (int x = x0; x < x0 + win; ++x) {
                    const double va = a[static_cast<std::size_t>(y) * w + x];
                    const double vb = b[static_cast<std::size_t>(y) * w + x];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double ma = sa / n, mb = sb / n;
            const double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
            const double cab = sab / n - ma * mb;
            double q;
            if (va <= 0.0 && vb <= 0.0)
                q = ma == mb ? 1.0 : 0.0;
            else if (va <= 0.0 || vb <= 0.0)
                q = 0.0;
            else {
                const double denom = (va + vb) * (ma * ma + mb * mb);
                q = denom > 0.0 ? 4.0 * cab * ma * mb / denom : 2.0 * cab / (va + vb);
            }
            acc += q;
            ++count;
        }
    return acc / count;
}

// Scharr magnitude on a flat channel buffer (reflect borders), transcribed
// separately from the library stencil.
inline std::vector<double> scharr_mag(const std::vector<double>& img, int h, int w) {
    auto ref = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    auto px = [&](int y, int x) {
        return img[static_cast<std::size_t>(ref(y, h)) * w + ref(x, w)];
    };
    std::vector<double> out(img.size());
    const double s[3] = {3.0 / 16.0, 10.0 / 16.0, 3.0 / 16.0};
    const double d[3] = {-0.5, 0.0, 0.5};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = 0, gy = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    gx += s[i] * d[j] * px(y + i - 1, x + j - 1);
                    gy += d[i] * s[j] * px(y + i - 1, x + j - 1);
                }
            out[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

struct QnrOracle {
    double d_lambda, d_s, qnr;
};

inline QnrOracle qnr(const ImageTensor& fused, const ImageTensor& orig,
                     const ImageTensor& pan, double alpha, double beta, int win) {
    const int h = fused.height, w = fused.width, bands = fused.channels;
    auto chan = [&](const ImageTensor& im, int c) {
        std::vector<double> v(static_cast<std::size_t>(h) * w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) v[static_cast<std::size_t>(y) * w + x] = im.at(y, x, c);
        return v;
    };
    double dl = 0.0;
    for (int i = 0; i < bands; ++i)
        for (int j = i + 1; j < bands; ++j) {
            const double qo = q_index(chan(orig, i), chan(orig, j), h, w, win);
            const double qf = q_index(chan(fused, i), chan(fused, j), h, w, win);
            dl += std::clamp(std::abs(qo - qf), 0.0, 1.0);
        }
    dl *= 2.0 / (static_cast<double>(bands) * (bands - 1));
    const auto gp = scharr_mag(chan(pan, 0), h, w);
    double ds = 0.0;
    for (int b = 0; b < bands; ++b) {
        const double qo = q_index(scharr_mag(chan(orig, b), h, w), gp, h, w, win);
        const double qf = q_index(scharr_mag(chan(fused, b), h, w), gp, h, w, win);
        ds += std::clamp(std::abs(qo - qf), 0.0, 1.0);
    }
    ds /= bands;
    return {dl, ds, std::pow(1.0 - dl, alpha) * std::pow(1.0 - ds, beta)};
}

// ---------------------------------------------------------------------------
// misc
// ---------------------------------------------------------------------------

// two-pass variance, the brute-force counterpart of the library's Welford
inline ImageTensor variance_two_pass(const std::vector<ImageTensor>& samples) {
    const auto& f = samples[0];
    ImageTensor mean(f.height, f.width, f.channels, srtk::Domain::Latent);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.data.size(); ++i) mean.data[i] += s.data[i];
    for (double& v : mean.data) v /= static_cast<double>(samples.size());
    ImageTensor var(f.height, f.width, f.channels, srtk::Domain::Latent);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.data.size(); ++i) {
            const double d = s.data[i] - mean.data[i];
            var.data[i] += d * d;
        }
    for (double& v : var.data) v /= static_cast<double>(samples.size() - 1);
    return var;
}

// central finite differences against an analytic gradient; returns the
// norm-wise relative error
template <class LossFn>
double fd_relative_error(const ImageTensor& x, LossFn&& f,
                         const ImageTensor& analytic, double step = 1e-5) {
    ImageTensor probe = x;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        probe.data[i] = orig + step;
        const double fp = f(probe);
        probe.data[i] = orig - step;
        const double fm = f(probe);
        probe.data[i] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        const double d = analytic.data[i] - fd;
        num += d * d;
        den += fd * fd;
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// random orthogonal matrix via Gram-Schmidt on Gaussian columns
inline srtk::linalg::Mat random_orthogonal(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> dist;
    srtk::linalg::Mat q(d, d);
    for (int col = 0; col < d; ++col) {
        std::vector<double> v(d);
        for (int i = 0; i < d; ++i) v[i] = dist(rng);
        for (int prev = 0; prev < col; ++prev) {
            double dot = 0.0;
            for (int i = 0; i < d; ++i) dot += v[i] * q(i, prev);
            for (int i = 0; i < d; ++i) v[i] -= dot * q(i, prev);
        }
        double norm = 0.0;
        for (int i = 0; i < d; ++i) norm += v[i] * v[i];
        norm = std::sqrt(norm);
        for (int i = 0; i < d; ++i) q(i, col) = v[i] / norm;
    }
    return q;
}

// plain Gauss-Jordan inversion for the NIQE oracle
inline srtk::linalg::Mat invert_dense(const srtk::linalg::Mat& m) {
    const int n = m.rows;
    srtk::linalg::Mat a = m;
    srtk::linalg::Mat inv = srtk::linalg::Mat::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        for (int j = 0; j < n; ++j) {
            std::swap(a(piv, j), a(col, j));
            std::swap(inv(piv, j), inv(col, j));
        }
        const double p = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= p;
            inv(col, j) /= p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

// exact one-sided binomial sign-test tail: P(X >= k) for X ~ Bin(n, 1/2)
inline double sign_test_tail(int k, int n) {
    long double total = 0.0L;
    for (int i = k; i <= n; ++i) {
        long double c = 1.0L;
        for (int j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
        total += c;
    }
    return static_cast<double>(total / std::pow(2.0L, n));
}

}  // namespace oracles
