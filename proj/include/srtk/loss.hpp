#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/fft.hpp"
#include "srtk/imgmath.hpp"

namespace srtk::loss {

enum class OmegaMode { Uniform, InverseSigmaSq };

inline const char* omega_mode_name(OmegaMode m) {
    return m == OmegaMode::Uniform ? "uniform" : "inv-sigma-sq";
}

struct LossWeights {
    double lambda_fft = 1.0;
    double lambda_color = 1.0;
    double lambda_lpips = 1.0;
    double gamma = 1.0;       // radial exponent of the spectral weight
    double blur_sigma = 3.0;  // pixels, for the color-loss blur
    OmegaMode omega_mode = OmegaMode::Uniform;

    void validate() const {
        if (lambda_fft < 0 || lambda_color < 0 || lambda_lpips < 0 || gamma < 0)
            throw DomainError("loss weights: lambdas and gamma must be non-negative");
        if (!(blur_sigma > 0)) throw DomainError("loss weights: blur_sigma must be positive");
    }
};

struct FeatureLayer {
    ImageTensor features;         // Hl x Wl x Cl
    std::vector<double> weights;  // length Cl, non-negative
};

struct FeatureStack {
    std::vector<FeatureLayer> layers;
};

struct LossBreakdown {
    double base = 0.0;
    double fft = 0.0;
    double color = 0.0;
    double perceptual = 0.0;
    double total = 0.0;
    bool perceptual_present = false;
    std::optional<ImageTensor> grad;  // d total / d pred (analytic terms only)
};

inline double omega_value(OmegaMode mode, double sigma_t) {
    return mode == OmegaMode::Uniform ? 1.0 : 1.0 / (sigma_t * sigma_t + 1e-4);
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------
// Base flow-matching term: mean of omega^2 (pred - z0)^2
// ---------------------------------------------------------------------------

inline double base_flow_loss(const ImageTensor& pred, const ImageTensor& z0,
                             double sigma_t, OmegaMode mode) {
    require_same_shape(pred, z0, "base_flow_loss");
    const double w2 = omega_value(mode, sigma_t) * omega_value(mode, sigma_t);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - z0.data[i];
        acc += d * d;
    }
    return w2 * acc / static_cast<double>(pred.size());
}

inline double base_flow_loss_grad(const ImageTensor& pred, const ImageTensor& z0,
                                  double sigma_t, OmegaMode mode, ImageTensor& grad) {
    require_same_shape(pred, z0, "base_flow_loss");
    const double w2 = omega_value(mode, sigma_t) * omega_value(mode, sigma_t);
    const double n = static_cast<double>(pred.size());
    grad = ImageTensor(pred.height, pred.width, pred.channels, Domain::Latent);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - z0.data[i];
        acc += d * d;
        grad.data[i] = 2.0 * w2 * d / n;
    }
    return w2 * acc / n;
}

// ---------------------------------------------------------------------------
// Spectral magnitude term with radial emphasis
// ---------------------------------------------------------------------------

// W[k,l] = (rho / rho_max)^gamma on the unshifted grid, rho the wrap-around
// distance to DC. gamma = 0 gives a flat weight of 1 everywhere.
inline ImageTensor radial_weight(int h, int w, double gamma) {
    if (h < 1 || w < 1) throw ShapeError("radial_weight: dims must be >= 1");
    if (gamma < 0.0) throw DomainError("radial_weight: gamma must be >= 0");
    ImageTensor out(h, w, 1, Domain::Latent);
    if (gamma == 0.0) {
        std::fill(out.data.begin(), out.data.end(), 1.0);
        return out;
    }
    const double rho_max = std::hypot(static_cast<double>(h / 2), static_cast<double>(w / 2));
    for (int k = 0; k < h; ++k) {
        const int fk = std::min(k, h - k);
        for (int l = 0; l < w; ++l) {
            const int fl = std::min(l, w - l);
            const double rho = std::hypot(static_cast<double>(fk), static_cast<double>(fl));
            out.at(k, l, 0) = rho_max > 0.0 ? std::pow(rho / rho_max, gamma) : 0.0;
        }
    }
    return out;
}

inline double fft_loss(const ImageTensor& pred, const ImageTensor& target, double gamma) {
    require_same_shape(pred, target, "fft_loss");
    const ImageTensor w = radial_weight(pred.height, pred.width, gamma);
    const std::size_t bins = static_cast<std::size_t>(pred.height) * pred.width;
    double acc = 0.0;
    for (int c = 0; c < pred.channels; ++c) {
        const auto fp = fft::forward_channel(pred, c);
        const auto ft = fft::forward_channel(target, c);
        double chan = 0.0;
        for (std::size_t i = 0; i < bins; ++i)
            chan += w.data[i] * std::abs(std::abs(fp[i]) - std::abs(ft[i]));
        acc += chan / static_cast<double>(bins);
    }
    return acc / static_cast<double>(pred.channels);
}

inline double fft_loss_grad(const ImageTensor& pred, const ImageTensor& target,
                            double gamma, ImageTensor& grad) {
    require_same_shape(pred, target, "fft_loss");
    const ImageTensor w = radial_weight(pred.height, pred.width, gamma);
    const std::size_t bins = static_cast<std::size_t>(pred.height) * pred.width;
    const double norm = 1.0 / (static_cast<double>(bins) * pred.channels);
    grad = ImageTensor(pred.height, pred.width, pred.channels, Domain::Latent);
    double acc = 0.0;
    for (int c = 0; c < pred.channels; ++c) {
        const auto fp = fft::forward_channel(pred, c);
        const auto ft = fft::forward_channel(target, c);
        // h_k = coef_k * conj(F_k)/|F_k|; the pixel gradient is the real part
        // of the forward transform of h (d|F_k|/dp_x = Re(conj(F_k) e^{-i...})/|F_k|).
        std::vector<fft::cplx> h(bins);
        for (std::size_t i = 0; i < bins; ++i) {
            const double mp = std::abs(fp[i]);
            const double diff = mp - std::abs(ft[i]);
            acc += w.data[i] * std::abs(diff) * norm;
            const double coef = w.data[i] * sign_of(diff) * norm;
            h[i] = (mp > 0.0 && coef != 0.0) ? std::conj(fp[i]) * (coef / mp)
                                             : fft::cplx(0.0, 0.0);
        }
        fft::transform_2d(h, pred.height, pred.width, false);
        for (std::size_t i = 0; i < bins; ++i)
            grad.data[i * pred.channels + c] = h[i].real();
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Blurred-CIELAB color term
// ---------------------------------------------------------------------------

namespace detail {

struct ChannelStats {
    double mu[3];
    double sd[3];  // population stdev
};

inline ChannelStats lab_stats(const ImageTensor& lab) {
    ChannelStats st{};
    const double n = static_cast<double>(lab.height) * lab.width;
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int y = 0; y < lab.height; ++y)
            for (int x = 0; x < lab.width; ++x) s += lab.at(y, x, c);
        st.mu[c] = s / n;
        double v = 0.0;
        for (int y = 0; y < lab.height; ++y)
            for (int x = 0; x < lab.width; ++x) {
                const double d = lab.at(y, x, c) - st.mu[c];
                v += d * d;
            }
        st.sd[c] = std::sqrt(v / n);
    }
    return st;
}

inline void check_color_inputs(const ImageTensor& pred, const ImageTensor& target) {
    require_same_shape(pred, target, "color_loss");
    if (pred.channels != 3 || pred.domain != Domain::Unit ||
        target.domain != Domain::Unit)
        throw DomainError("color_loss: expects unit-domain RGB inputs");
}

}  // namespace detail

// L1 of the blurred-Lab difference plus L1 of per-channel mean/stdev
// differences of the blurred-Lab images (each stats term averaged over the
// three channels).
inline double color_loss(const ImageTensor& pred, const ImageTensor& target,
                         double blur_sigma) {
    detail::check_color_inputs(pred, target);
    const auto kernel = imgmath::GaussianKernel::make(blur_sigma);
    const ImageTensor a = imgmath::gaussian_blur(imgmath::srgb_to_lab(pred), kernel);
    const ImageTensor b = imgmath::gaussian_blur(imgmath::srgb_to_lab(target), kernel);
    double pix = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        pix += std::abs(a.data[i] - b.data[i]);
    pix /= static_cast<double>(a.size());
    const auto sa = detail::lab_stats(a);
    const auto sb = detail::lab_stats(b);
    double stats = 0.0;
    for (int c = 0; c < 3; ++c)
        stats += std::abs(sa.mu[c] - sb.mu[c]) + std::abs(sa.sd[c] - sb.sd[c]);
    return pix + stats / 3.0;
}

inline double color_loss_grad(const ImageTensor& pred, const ImageTensor& target,
                              double blur_sigma, ImageTensor& grad) {
    detail::check_color_inputs(pred, target);
    const auto kernel = imgmath::GaussianKernel::make(blur_sigma);
    const ImageTensor lab_pred = imgmath::srgb_to_lab(pred);
    const ImageTensor a = imgmath::gaussian_blur(lab_pred, kernel);
    const ImageTensor b =
        imgmath::gaussian_blur(imgmath::srgb_to_lab(target), kernel);

    const double npix = static_cast<double>(a.height) * a.width;
    const double nelem = npix * 3.0;

    double pix = 0.0;
    ImageTensor g_blur(a.height, a.width, 3, Domain::Latent);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        pix += std::abs(d);
        g_blur.data[i] = sign_of(d) / nelem;
    }
    pix /= nelem;

    const auto sa = detail::lab_stats(a);
    const auto sb = detail::lab_stats(b);
    double stats = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double dmu = sa.mu[c] - sb.mu[c];
        const double dsd = sa.sd[c] - sb.sd[c];
        stats += std::abs(dmu) + std::abs(dsd);
        const double mu_coef = sign_of(dmu) / (3.0 * npix);
        const double sd_coef =
            sa.sd[c] > 0.0 ? sign_of(dsd) / (3.0 * npix * sa.sd[c]) : 0.0;
        if (mu_coef != 0.0 || sd_coef != 0.0)
            for (int y = 0; y < a.height; ++y)
                for (int x = 0; x < a.width; ++x)
                    g_blur.at(y, x, c) +=
                        mu_coef + sd_coef * (a.at(y, x, c) - sa.mu[c]);
    }

    const ImageTensor g_lab = imgmath::gaussian_blur_adjoint(g_blur, kernel);
    grad = ImageTensor(pred.height, pred.width, 3, Domain::Latent);
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            const double rgb[3] = {pred.at(y, x, 0), pred.at(y, x, 1), pred.at(y, x, 2)};
            double jac[3][3];
            imgmath::color::lab_jacobian(rgb, jac);
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int i = 0; i < 3; ++i) s += jac[i][j] * g_lab.at(y, x, i);
                grad.at(y, x, j) = s;
            }
        }
    return pix + stats / 3.0;
}

// ---------------------------------------------------------------------------
// Feature-space perceptual distance
// ---------------------------------------------------------------------------

namespace detail {

// Unit-normalize each pixel's channel vector; zero vectors stay zero.
inline ImageTensor unit_normalize(const ImageTensor& f) {
    ImageTensor out = f;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double n2 = 0.0;
            for (int c = 0; c < f.channels; ++c) n2 += f.at(y, x, c) * f.at(y, x, c);
            if (n2 > 0.0) {
                const double inv = 1.0 / std::sqrt(n2);
                for (int c = 0; c < f.channels; ++c) out.at(y, x, c) *= inv;
            }
        }
    return out;
}

}  // namespace detail

// Sum over layers of spatially averaged squared weighted differences of
// unit-normalized features.
inline double perceptual_distance(const FeatureStack& fa, const FeatureStack& fb) {
    if (fa.layers.size() != fb.layers.size())
        throw ShapeError("perceptual_distance: layer count mismatch");
    double total = 0.0;
    for (std::size_t l = 0; l < fa.layers.size(); ++l) {
        const auto& la = fa.layers[l];
        const auto& lb = fb.layers[l];
        require_same_shape(la.features, lb.features, "perceptual_distance");
        if (la.weights.size() != static_cast<std::size_t>(la.features.channels) ||
            lb.weights.size() != la.weights.size())
            throw ShapeError("perceptual_distance: weight length mismatch");
        for (std::size_t c = 0; c < la.weights.size(); ++c)
            if (la.weights[c] < 0.0 || lb.weights[c] < 0.0)
                throw DomainError("perceptual_distance: negative channel weight");
        const ImageTensor na = detail::unit_normalize(la.features);
        const ImageTensor nb = detail::unit_normalize(lb.features);
        double layer = 0.0;
        for (int y = 0; y < na.height; ++y)
            for (int x = 0; x < na.width; ++x)
                for (int c = 0; c < na.channels; ++c) {
                    const double d = la.weights[c] * (na.at(y, x, c) - nb.at(y, x, c));
                    layer += d * d;
                }
        total += layer / (static_cast<double>(na.height) * na.width);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Total objective
// ---------------------------------------------------------------------------

inline LossBreakdown total_loss(const ImageTensor& pred, const ImageTensor& target,
                                const ImageTensor& z0, double sigma_t,
                                const FeatureStack* features_a,
                                const FeatureStack* features_b,
                                const LossWeights& weights, bool want_grad) {
    weights.validate();
    LossBreakdown out;
    ImageTensor g_base, g_fft, g_color;
    if (want_grad) {
        out.base = base_flow_loss_grad(pred, z0, sigma_t, weights.omega_mode, g_base);
        out.fft = weights.lambda_fft > 0.0
                      ? fft_loss_grad(pred, target, weights.gamma, g_fft)
                      : 0.0;
        out.color = weights.lambda_color > 0.0
                        ? color_loss_grad(pred, target, weights.blur_sigma, g_color)
                        : 0.0;
        ImageTensor grad(pred.height, pred.width, pred.channels, Domain::Latent);
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
            double g = g_base.data[i];
            if (weights.lambda_fft > 0.0) g += weights.lambda_fft * g_fft.data[i];
            if (weights.lambda_color > 0.0) g += weights.lambda_color * g_color.data[i];
            grad.data[i] = g;
        }
        out.grad = std::move(grad);
    } else {
        out.base = base_flow_loss(pred, z0, sigma_t, weights.omega_mode);
        out.fft = weights.lambda_fft > 0.0 ? fft_loss(pred, target, weights.gamma) : 0.0;
        out.color = weights.lambda_color > 0.0
                        ? color_loss(pred, target, weights.blur_sigma)
                        : 0.0;
    }
    if (features_a != nullptr && features_b != nullptr) {
        out.perceptual = perceptual_distance(*features_a, *features_b);
        out.perceptual_present = true;
    }
    out.total = out.base + weights.lambda_fft * out.fft +
                weights.lambda_color * out.color +
                weights.lambda_lpips * out.perceptual;
    return out;
}

}  // namespace srtk::loss
