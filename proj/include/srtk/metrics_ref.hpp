#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/fft.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/loss.hpp"

namespace srtk::metrics_ref {

// ---------------------------------------------------------------------------
// PSNR
// ---------------------------------------------------------------------------

inline double psnr(const ImageTensor& ref, const ImageTensor& test, double peak) {
    require_same_shape(ref, test, "psnr");
    if (!(peak > 0.0)) throw DomainError("psnr: peak value must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        const double d = ref.data[i] - test.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

// ---------------------------------------------------------------------------
// SSIM (Gaussian-windowed local statistics, valid positions only)
// ---------------------------------------------------------------------------

struct SsimParams {
    int window_size = 11;  // odd
    double window_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;

    void validate() const {
        if (window_size < 1 || window_size % 2 == 0)
            throw DomainError("ssim: window size must be odd and positive");
        if (!(window_sigma > 0) || !(k1 > 0) || !(k2 > 0) || !(peak > 0))
            throw DomainError("ssim: parameters must be positive");
    }
};

namespace detail {

inline std::vector<double> window_1d(int size, double sigma) {
    std::vector<double> w(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable valid-mode filtering of a single-channel image.
inline std::vector<double> filter_valid(const ImageTensor& img,
                                        const std::vector<double>& w) {
    const int k = static_cast<int>(w.size());
    const int vh = img.height - k + 1, vw = img.width - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(img.height) * vw);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += w[t] * img.at(y, x + t, 0);
            rows[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(vh) * vw);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += w[t] * rows[static_cast<std::size_t>(y + t) * vw + x];
            out[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    return out;
}

}  // namespace detail

inline double ssim(const ImageTensor& ref, const ImageTensor& test,
                   const SsimParams& params = {}) {
    params.validate();
    require_same_shape(ref, test, "ssim");
    const ImageTensor x = imgmath::luminance(ref);
    const ImageTensor y = imgmath::luminance(test);
    if (x.height < params.window_size || x.width < params.window_size)
        throw SizeError("ssim: image smaller than window");
    const auto w = detail::window_1d(params.window_size, params.window_sigma);

    ImageTensor xx(x.height, x.width, 1, Domain::Latent);
    ImageTensor yy(x.height, x.width, 1, Domain::Latent);
    ImageTensor xy(x.height, x.width, 1, Domain::Latent);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        xx.data[i] = x.data[i] * x.data[i];
        yy.data[i] = y.data[i] * y.data[i];
        xy.data[i] = x.data[i] * y.data[i];
    }
    const auto mu_x = detail::filter_valid(x, w);
    const auto mu_y = detail::filter_valid(y, w);
    const auto s_xx = detail::filter_valid(xx, w);
    const auto s_yy = detail::filter_valid(yy, w);
    const auto s_xy = detail::filter_valid(xy, w);

    const double c1 = params.k1 * params.peak * params.k1 * params.peak;
    const double c2 = params.k2 * params.peak * params.k2 * params.peak;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double vx = s_xx[i] - mx * mx;
        const double vy = s_yy[i] - my * my;
        const double cxy = s_xy[i] - mx * my;
        acc += (2.0 * mx * my + c1) * (2.0 * cxy + c2) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mu_x.size());
}

// ---------------------------------------------------------------------------
// Spectral angle mapper (degrees)
// ---------------------------------------------------------------------------

inline double sam_degrees(const ImageTensor& ref, const ImageTensor& test,
                          std::size_t* excluded_pixels = nullptr) {
    require_same_shape(ref, test, "sam");
    if (ref.channels < 2) throw DomainError("sam: needs at least 2 channels");
    double acc = 0.0;
    std::size_t used = 0, excluded = 0;
    for (int y = 0; y < ref.height; ++y)
        for (int x = 0; x < ref.width; ++x) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (int c = 0; c < ref.channels; ++c) {
                const double a = ref.at(y, x, c), b = test.at(y, x, c);
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            if (na == 0.0 || nb == 0.0) {
                ++excluded;
                continue;
            }
            const double cosv = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
            acc += std::acos(cosv);
            ++used;
        }
    if (excluded_pixels != nullptr) *excluded_pixels = excluded;
    if (used == 0) throw DegenerateInput("sam: every pixel has a zero-norm spectrum");
    return acc / static_cast<double>(used) * (180.0 / std::numbers::pi);
}

// ---------------------------------------------------------------------------
// CIEDE2000
// ---------------------------------------------------------------------------

namespace detail {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double cosd(double d) { return std::cos(deg2rad(d)); }
inline double sind(double d) { return std::sin(deg2rad(d)); }

inline double pow7(double x) {
    const double x2 = x * x, x3 = x2 * x;
    return x3 * x3 * x;
}

}  // namespace detail

// Single-pair CIEDE2000 with kL = kC = kH = 1.
inline double delta_e2000_pair(double l1, double a1, double b1, double l2,
                               double a2, double b2) {
    using namespace detail;
    const double c1 = std::hypot(a1, b1);
    const double c2 = std::hypot(a2, b2);
    const double cbar = 0.5 * (c1 + c2);
    const double g = 0.5 * (1.0 - std::sqrt(pow7(cbar) / (pow7(cbar) + pow7(25.0))));
    const double a1p = (1.0 + g) * a1;
    const double a2p = (1.0 + g) * a2;
    const double c1p = std::hypot(a1p, b1);
    const double c2p = std::hypot(a2p, b2);
    auto hue_deg = [](double ap, double b) {
        if (ap == 0.0 && b == 0.0) return 0.0;
        double h = std::atan2(b, ap) * 180.0 / std::numbers::pi;
        if (h < 0.0) h += 360.0;
        return h;
    };
    const double h1p = hue_deg(a1p, b1);
    const double h2p = hue_deg(a2p, b2);

    const double dlp = l2 - l1;
    const double dcp = c2p - c1p;
    double dhp_deg = 0.0;
    if (c1p * c2p != 0.0) {
        dhp_deg = h2p - h1p;
        if (dhp_deg > 180.0) dhp_deg -= 360.0;
        if (dhp_deg < -180.0) dhp_deg += 360.0;
    }
    const double dhp_big = 2.0 * std::sqrt(c1p * c2p) * sind(dhp_deg / 2.0);

    const double lbar = 0.5 * (l1 + l2);
    const double cbarp = 0.5 * (c1p + c2p);
    double hbar;
    if (c1p * c2p == 0.0) {
        hbar = h1p + h2p;
    } else if (std::abs(h1p - h2p) <= 180.0) {
        hbar = 0.5 * (h1p + h2p);
    } else if (h1p + h2p < 360.0) {
        hbar = 0.5 * (h1p + h2p + 360.0);
    } else {
        hbar = 0.5 * (h1p + h2p - 360.0);
    }
    const double t = 1.0 - 0.17 * cosd(hbar - 30.0) + 0.24 * cosd(2.0 * hbar) +
                     0.32 * cosd(3.0 * hbar + 6.0) - 0.20 * cosd(4.0 * hbar - 63.0);
    const double dtheta = 30.0 * std::exp(-((hbar - 275.0) / 25.0) * ((hbar - 275.0) / 25.0));
    const double rc = 2.0 * std::sqrt(pow7(cbarp) / (pow7(cbarp) + pow7(25.0)));
    const double sl = 1.0 + 0.015 * (lbar - 50.0) * (lbar - 50.0) /
                                std::sqrt(20.0 + (lbar - 50.0) * (lbar - 50.0));
    const double sc = 1.0 + 0.045 * cbarp;
    const double sh = 1.0 + 0.015 * cbarp * t;
    const double rt = -rc * sind(2.0 * dtheta);
    const double tl = dlp / sl, tc = dcp / sc, th = dhp_big / sh;
    return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

// Mean per-pixel CIEDE2000 over two Lab images.
inline double delta_e2000(const ImageTensor& ref_lab, const ImageTensor& test_lab) {
    require_same_shape(ref_lab, test_lab, "delta_e2000");
    if (ref_lab.domain != Domain::Lab || test_lab.domain != Domain::Lab ||
        ref_lab.channels != 3)
        throw DomainError("delta_e2000: expects lab-domain 3-channel images");
    double acc = 0.0;
    for (int y = 0; y < ref_lab.height; ++y)
        for (int x = 0; x < ref_lab.width; ++x)
            acc += delta_e2000_pair(ref_lab.at(y, x, 0), ref_lab.at(y, x, 1),
                                    ref_lab.at(y, x, 2), test_lab.at(y, x, 0),
                                    test_lab.at(y, x, 1), test_lab.at(y, x, 2));
    return acc / (static_cast<double>(ref_lab.height) * ref_lab.width);
}

// ---------------------------------------------------------------------------
// FSIM: phase congruency + gradient magnitude similarity
// ---------------------------------------------------------------------------

struct FsimParams {
    double t1 = 0.85;   // phase-congruency stabilizer
    double t2 = 160.0;  // gradient stabilizer on a [0,255] scale
    double alpha = 1.0;
    double beta = 1.0;
    int pc_scales = 4;
    int pc_orientations = 4;
    // log-Gabor bank
    double min_wavelength = 6.0;
    double mult = 2.0;
    double sigma_onf = 0.55;
    double dtheta_on_sigma = 1.2;
    double noise_k = 2.0;   // Rayleigh threshold multiplier; negative disables
                            // compensation (noiseless synthetic patterns)
    double cutoff = 0.5;    // frequency-spread sigmoid midpoint
    double spread_gain = 10.0;
    double epsilon = 1e-4;

    void validate() const {
        if (!(t1 > 0) || !(t2 > 0) || !(alpha > 0) || !(beta > 0))
            throw DomainError("fsim: T1, T2, alpha, beta must be positive");
        if (pc_scales < 1 || pc_orientations < 1)
            throw DomainError("fsim: scales and orientations must be >= 1");
    }
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Per-pixel phase congruency of a single-channel image via a log-Gabor
// filter bank, with Rayleigh noise compensation and frequency-spread
// weighting. Result lies in [0,1].
inline ImageTensor phase_congruency(const ImageTensor& img, const FsimParams& p) {
    const int h = img.height, w = img.width;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    const auto spectrum = fft::forward_channel(img, 0);

    // frequency-plane geometry, unshifted layout
    std::vector<double> radius(n), sin_t(n), cos_t(n);
    for (int y = 0; y < h; ++y) {
        const double fy = (y <= h / 2 ? y : y - h) / static_cast<double>(h);
        for (int x = 0; x < w; ++x) {
            const double fx = (x <= w / 2 ? x : x - w) / static_cast<double>(w);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            radius[i] = std::hypot(fx, fy);
            const double th = std::atan2(-fy, fx);
            sin_t[i] = std::sin(th);
            cos_t[i] = std::cos(th);
        }
    }
    radius[0] = 1.0;  // avoid log(0); the DC gain is zeroed below

    const double log_sigma = std::log(p.sigma_onf);
    std::vector<std::vector<double>> log_gabor(p.pc_scales, std::vector<double>(n));
    for (int s = 0; s < p.pc_scales; ++s) {
        const double f0 = 1.0 / (p.min_wavelength * std::pow(p.mult, s));
        for (std::size_t i = 0; i < n; ++i) {
            const double lr = std::log(radius[i] / f0);
            const double lp = 1.0 / (1.0 + std::pow(radius[i] / 0.45, 30.0));
            log_gabor[s][i] = std::exp(-lr * lr / (2.0 * log_sigma * log_sigma)) * lp;
        }
        log_gabor[s][0] = 0.0;
    }

    const double theta_sigma =
        std::numbers::pi / p.pc_orientations / p.dtheta_on_sigma;
    std::vector<double> energy_all(n, 0.0), an_all(n, 0.0);
    std::vector<std::vector<fft::cplx>> eo(p.pc_scales);
    std::vector<double> spread(n);

    for (int o = 0; o < p.pc_orientations; ++o) {
        const double angl = o * std::numbers::pi / p.pc_orientations;
        const double ca = std::cos(angl), sa = std::sin(angl);
        for (std::size_t i = 0; i < n; ++i) {
            const double ds = sin_t[i] * ca - cos_t[i] * sa;
            const double dc = cos_t[i] * ca + sin_t[i] * sa;
            const double dtheta = std::abs(std::atan2(ds, dc));
            spread[i] = std::exp(-dtheta * dtheta / (2.0 * theta_sigma * theta_sigma));
        }
        std::vector<double> sum_an(n, 0.0), sum_re(n, 0.0), sum_im(n, 0.0), max_an(n, 0.0);
        for (int s = 0; s < p.pc_scales; ++s) {
            std::vector<fft::cplx> buf(n);
            for (std::size_t i = 0; i < n; ++i)
                buf[i] = spectrum[i] * (log_gabor[s][i] * spread[i]);
            fft::transform_2d(buf, h, w, true);
            eo[s] = std::move(buf);
            for (std::size_t i = 0; i < n; ++i) {
                const double an = std::abs(eo[s][i]);
                sum_an[i] += an;
                sum_re[i] += eo[s][i].real();
                sum_im[i] += eo[s][i].imag();
                max_an[i] = std::max(max_an[i], an);
            }
        }
        // noise threshold from the smallest-scale response (Rayleigh stats)
        double threshold = 0.0;
        if (p.noise_k >= 0.0) {
            std::vector<double> an0(n);
            for (std::size_t i = 0; i < n; ++i) an0[i] = std::abs(eo[0][i]);
            const double tau = median(an0) / std::sqrt(std::log(4.0));
            const double inv_mult = 1.0 / p.mult;
            const double total_tau =
                tau * (1.0 - std::pow(inv_mult, p.pc_scales)) / (1.0 - inv_mult);
            const double noise_mean = total_tau * std::sqrt(std::numbers::pi / 2.0);
            const double noise_sigma =
                total_tau * std::sqrt((4.0 - std::numbers::pi) / 2.0);
            threshold = noise_mean + p.noise_k * noise_sigma;
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double xe = std::hypot(sum_re[i], sum_im[i]) + p.epsilon;
            const double mre = sum_re[i] / xe, mim = sum_im[i] / xe;
            double energy = 0.0;
            for (int s = 0; s < p.pc_scales; ++s) {
                const double re = eo[s][i].real(), im = eo[s][i].imag();
                energy += re * mre + im * mim - std::abs(re * mim - im * mre);
            }
            energy = std::max(energy - threshold, 0.0);
            const double width = sum_an[i] / (max_an[i] + p.epsilon) / p.pc_scales;
            const double weight =
                1.0 / (1.0 + std::exp(p.spread_gain * (p.cutoff - width)));
            energy_all[i] += weight * energy;
            an_all[i] += sum_an[i];
        }
    }

    ImageTensor pc(h, w, 1, Domain::Latent);
    for (std::size_t i = 0; i < n; ++i)
        pc.data[i] = energy_all[i] / (an_all[i] + p.epsilon);
    return pc;
}

// FSIM compares on a [0,255] luminance scale.
inline ImageTensor to_fsim_scale(const ImageTensor& img) {
    ImageTensor lum = imgmath::luminance(img);
    if (img.domain == Domain::Unit)
        for (double& v : lum.data) v *= 255.0;
    lum.domain = Domain::Latent;
    return lum;
}

}  // namespace detail

inline double fsim(const ImageTensor& ref, const ImageTensor& test,
                   const FsimParams& params = {}) {
    params.validate();
    require_same_shape(ref, test, "fsim");
    const ImageTensor a = detail::to_fsim_scale(ref);
    const ImageTensor b = detail::to_fsim_scale(test);
    const ImageTensor pc_a = detail::phase_congruency(a, params);
    const ImageTensor pc_b = detail::phase_congruency(b, params);
    const ImageTensor gm_a = imgmath::gradient_magnitude(a);
    const ImageTensor gm_b = imgmath::gradient_magnitude(b);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pc_a.data.size(); ++i) {
        const double pa = pc_a.data[i], pb = pc_b.data[i];
        const double ga = gm_a.data[i], gb = gm_b.data[i];
        const double s_pc = (2.0 * pa * pb + params.t1) / (pa * pa + pb * pb + params.t1);
        const double s_g = (2.0 * ga * gb + params.t2) / (ga * ga + gb * gb + params.t2);
        const double s_l = std::pow(s_pc, params.alpha) * std::pow(s_g, params.beta);
        const double pcm = std::max(pa, pb);
        num += pcm * s_l;
        den += pcm;
    }
    if (den == 0.0) throw DegenerateInput("fsim: phase congruency is zero everywhere");
    return num / den;
}

// ---------------------------------------------------------------------------
// DISTS from externally computed features
// ---------------------------------------------------------------------------

namespace detail {

// Pearson correlation with a total definition for constant inputs: equal
// constants correlate at 1, constant-vs-anything-else at 0.
inline double correlation_total(std::span<const double> a, std::span<const double> b,
                                bool* degenerate) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
        cab += (a[i] - ma) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        if (degenerate != nullptr) *degenerate = true;
        return (va == 0.0 && vb == 0.0 && ma == mb) ? 1.0 : 0.0;
    }
    return cab / std::sqrt(va * vb);
}

}  // namespace detail

// Weighted sum of structure terms 1 - rho(features) and texture terms
// 1 - rho(channel means), per layer.
inline double dists_from_features(const loss::FeatureStack& fa,
                                  const loss::FeatureStack& fb,
                                  std::span<const double> alpha,
                                  std::span<const double> beta,
                                  int* degenerate_terms = nullptr) {
    if (fa.layers.size() != fb.layers.size())
        throw ShapeError("dists: layer count mismatch");
    if (alpha.size() != fa.layers.size() || beta.size() != fa.layers.size())
        throw ShapeError("dists: weight arrays must have one entry per layer");
    int degen = 0;
    double total = 0.0;
    for (std::size_t l = 0; l < fa.layers.size(); ++l) {
        const auto& xa = fa.layers[l].features;
        const auto& xb = fb.layers[l].features;
        require_same_shape(xa, xb, "dists");
        bool d1 = false, d2 = false;
        const double rho_s = detail::correlation_total(xa.data, xb.data, &d1);
        std::vector<double> mu_a(xa.channels, 0.0), mu_b(xb.channels, 0.0);
        const double npix = static_cast<double>(xa.height) * xa.width;
        for (int y = 0; y < xa.height; ++y)
            for (int x = 0; x < xa.width; ++x)
                for (int c = 0; c < xa.channels; ++c) {
                    mu_a[c] += xa.at(y, x, c) / npix;
                    mu_b[c] += xb.at(y, x, c) / npix;
                }
        const double rho_t = detail::correlation_total(mu_a, mu_b, &d2);
        degen += (d1 ? 1 : 0) + (d2 ? 1 : 0);
        total += alpha[l] * (1.0 - rho_s) + beta[l] * (1.0 - rho_t);
    }
    if (degenerate_terms != nullptr) *degenerate_terms = degen;
    return total;
}

}  // namespace srtk::metrics_ref
