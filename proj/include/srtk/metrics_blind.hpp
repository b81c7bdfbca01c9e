#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/linalg.hpp"

namespace srtk::metrics_blind {

// ---------------------------------------------------------------------------
// Frechet distance between Gaussian feature fits
// ---------------------------------------------------------------------------

struct FeatureMatrix {
    int n = 0;
    int d = 0;
    std::vector<double> data;  // n x d, row-major

    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * d + j];
    }
};

namespace detail {

struct GaussianFit {
    std::vector<double> mu;
    linalg::Mat cov;  // unbiased
};

inline GaussianFit fit_gaussian(const FeatureMatrix& f) {
    if (f.n < 2) throw InsufficientSamples("gaussian fit: need n >= 2 samples");
    GaussianFit g;
    g.mu.assign(f.d, 0.0);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.d; ++j) g.mu[j] += f(i, j);
    for (double& v : g.mu) v /= f.n;
    g.cov = linalg::Mat(f.d, f.d);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.d; ++j) {
            const double dj = f(i, j) - g.mu[j];
            for (int k = j; k < f.d; ++k)
                g.cov(j, k) += dj * (f(i, k) - g.mu[k]);
        }
    for (int j = 0; j < f.d; ++j)
        for (int k = j; k < f.d; ++k) {
            g.cov(j, k) /= (f.n - 1);
            g.cov(k, j) = g.cov(j, k);
        }
    return g;
}

inline constexpr double kEigClampTol = -1e-8;

inline std::vector<double> clamped_eigenvalues(const linalg::EighResult& eg,
                                               const char* what) {
    std::vector<double> out = eg.values;
    for (double& l : out) {
        if (l < kEigClampTol)
            throw NumericalError(std::string(what) +
                                 ": strongly negative eigenvalue " + std::to_string(l));
        l = std::max(l, 0.0);
    }
    return out;
}

// Symmetric square root via eigendecomposition with small-negative clamping.
inline linalg::Mat sqrt_psd(const linalg::Mat& m, const char* what) {
    const auto eg = linalg::eigh(m);
    const auto lam = clamped_eigenvalues(eg, what);
    const int n = m.rows;
    linalg::Mat scaled(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            scaled(i, k) = eg.vectors(i, k) * std::sqrt(lam[k]);
    return linalg::mat_mul(scaled, linalg::transpose(eg.vectors));
}

}  // namespace detail

// ||mu_a - mu_b||^2 + Tr(Ca) + Tr(Cb) - 2 Tr((Ca^1/2 Cb Ca^1/2)^1/2)
inline double fid(const FeatureMatrix& fa, const FeatureMatrix& fb,
                  std::vector<std::string>* warnings = nullptr) {
    if (fa.d != fb.d) throw ShapeError("fid: feature dimension mismatch");
    const auto ga = detail::fit_gaussian(fa);
    const auto gb = detail::fit_gaussian(fb);
    if (warnings != nullptr && (fa.n <= fa.d || fb.n <= fb.d))
        warnings->push_back("fid: covariance rank-deficient (n <= d)");

    double mu_term = 0.0;
    for (int j = 0; j < fa.d; ++j) {
        const double dm = ga.mu[j] - gb.mu[j];
        mu_term += dm * dm;
    }
    double tr_a = 0.0, tr_b = 0.0;
    for (int j = 0; j < fa.d; ++j) {
        tr_a += ga.cov(j, j);
        tr_b += gb.cov(j, j);
    }
    const linalg::Mat root_a = detail::sqrt_psd(ga.cov, "fid");
    linalg::Mat inner = linalg::mat_mul(linalg::mat_mul(root_a, gb.cov), root_a);
    for (int i = 0; i < inner.rows; ++i)
        for (int j = i + 1; j < inner.cols; ++j) {
            const double s = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = s;
            inner(j, i) = s;
        }
    const auto lam = detail::clamped_eigenvalues(linalg::eigh(inner), "fid");
    double tr_sqrt = 0.0;
    for (double l : lam) tr_sqrt += std::sqrt(l);
    return mu_term + tr_a + tr_b - 2.0 * tr_sqrt;
}

// ---------------------------------------------------------------------------
// NIQE: MVG distance over natural-scene-statistics features
// ---------------------------------------------------------------------------

// sqrt((mu1-mu2)^T ((cov1+cov2)/2)^-1 (mu1-mu2)); falls back to a
// pseudo-inverse when the averaged covariance is singular.
inline double mvg_distance(std::span<const double> mu1, const linalg::Mat& cov1,
                           std::span<const double> mu2, const linalg::Mat& cov2,
                           bool* used_pinv = nullptr) {
    const int d = static_cast<int>(mu1.size());
    if (mu2.size() != mu1.size() || cov1.rows != d || cov2.rows != d ||
        cov1.cols != d || cov2.cols != d)
        throw ShapeError("mvg_distance: dimension mismatch");
    linalg::Mat avg(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) avg(i, j) = 0.5 * (cov1(i, j) + cov2(i, j));
    std::vector<double> diff(d);
    for (int i = 0; i < d; ++i) diff[i] = mu1[i] - mu2[i];
    if (used_pinv != nullptr) *used_pinv = false;
    double q;
    if (auto x = linalg::solve(avg, diff)) {
        q = 0.0;
        for (int i = 0; i < d; ++i) q += diff[i] * (*x)[i];
    } else {
        if (used_pinv != nullptr) *used_pinv = true;
        q = linalg::quadform_pinv(avg, diff);
    }
    return std::sqrt(std::max(q, 0.0));
}

struct NiqeModel {
    std::vector<double> mu;
    linalg::Mat cov;
    int patch_size = 96;
    double sharpness_threshold = 0.75;
    int scales = 2;
};

namespace detail {

inline double gamma_fn(double x) { return std::tgamma(x); }

inline constexpr double kAlphaGridLo = 0.2;
inline constexpr double kAlphaGridStep = 0.001;
inline constexpr int kAlphaGridLen = 9801;  // 0.2 .. 10.0

inline const std::vector<double>& ggd_ratio_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kAlphaGridLen);
        for (int i = 0; i < kAlphaGridLen; ++i) {
            const double a = kAlphaGridLo + i * kAlphaGridStep;
            t[i] = gamma_fn(1.0 / a) * gamma_fn(3.0 / a) /
                   (gamma_fn(2.0 / a) * gamma_fn(2.0 / a));
        }
        return t;
    }();
    return table;
}

inline const std::vector<double>& aggd_ratio_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kAlphaGridLen);
        for (int i = 0; i < kAlphaGridLen; ++i) {
            const double a = kAlphaGridLo + i * kAlphaGridStep;
            t[i] = gamma_fn(2.0 / a) * gamma_fn(2.0 / a) /
                   (gamma_fn(1.0 / a) * gamma_fn(3.0 / a));
        }
        return t;
    }();
    return table;
}

inline double grid_argmin(const std::vector<double>& table, double target) {
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kAlphaGridLen; ++i) {
        const double err = std::abs(target - table[i]);
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    return kAlphaGridLo + best * kAlphaGridStep;
}

// Generalized Gaussian shape fit by moment matching over a grid.
inline double ggd_alpha(double ratio) { return grid_argmin(ggd_ratio_table(), ratio); }

inline double aggd_alpha(double rhat_norm) {
    return grid_argmin(aggd_ratio_table(), rhat_norm);
}

inline void fit_ggd(std::span<const double> x, double& alpha, double& sigma_sq) {
    double m2 = 0.0, m1 = 0.0;
    for (double v : x) {
        m2 += v * v;
        m1 += std::abs(v);
    }
    m2 /= static_cast<double>(x.size());
    m1 /= static_cast<double>(x.size());
    sigma_sq = m2;
    if (m1 <= 0.0) {
        alpha = 10.0;
        return;
    }
    alpha = ggd_alpha(m2 / (m1 * m1));
}

inline void fit_aggd(std::span<const double> x, double& alpha, double& eta,
                     double& sigma_l_sq, double& sigma_r_sq) {
    double sl = 0.0, sr = 0.0, m1 = 0.0, m2 = 0.0;
    std::size_t nl = 0, nr = 0;
    for (double v : x) {
        m1 += std::abs(v);
        m2 += v * v;
        if (v < 0.0) {
            sl += v * v;
            ++nl;
        } else if (v > 0.0) {
            sr += v * v;
            ++nr;
        }
    }
    const double n = static_cast<double>(x.size());
    m1 /= n;
    m2 /= n;
    sigma_l_sq = nl > 0 ? sl / static_cast<double>(nl) : 0.0;
    sigma_r_sq = nr > 0 ? sr / static_cast<double>(nr) : 0.0;
    if (m2 <= 0.0) {
        alpha = 10.0;
        eta = 0.0;
        return;
    }
    const double sigma_l = std::sqrt(sigma_l_sq);
    const double sigma_r = std::sqrt(sigma_r_sq);
    const double gamma_hat = sigma_l / std::max(sigma_r, 1e-300);
    const double r_hat = m1 * m1 / m2;
    const double g2 = gamma_hat * gamma_hat;
    const double rhat_norm = r_hat * (gamma_hat * g2 + 1.0) * (gamma_hat + 1.0) /
                             ((g2 + 1.0) * (g2 + 1.0));
    alpha = aggd_alpha(rhat_norm);
    eta = (sigma_r - sigma_l) * (gamma_fn(2.0 / alpha) / gamma_fn(1.0 / alpha)) *
          std::sqrt(gamma_fn(1.0 / alpha) / gamma_fn(3.0 / alpha));
}

struct MscnField {
    ImageTensor mscn;
    ImageTensor sigma;
};

// fixed 7x7 truncated Gaussian (sigma 7/6), the customary MSCN window
inline const std::array<double, 7>& mscn_window() {
    static const std::array<double, 7> w = [] {
        std::array<double, 7> t{};
        const double sigma = 7.0 / 6.0;
        double sum = 0.0;
        for (int i = -3; i <= 3; ++i) {
            t[i + 3] = std::exp(-0.5 * i * i / (sigma * sigma));
            sum += t[i + 3];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return w;
}

inline ImageTensor mscn_filter(const ImageTensor& img) {
    const auto& w = mscn_window();
    const int h = img.height, wd = img.width;
    ImageTensor rows(h, wd, 1, Domain::Latent), out(h, wd, 1, Domain::Latent);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
            double acc = 0.0;
            for (int t = -3; t <= 3; ++t)
                acc += w[t + 3] * img.at(y, imgmath::reflect_index(x + t, wd), 0);
            rows.at(y, x, 0) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
            double acc = 0.0;
            for (int t = -3; t <= 3; ++t)
                acc += w[t + 3] * rows.at(imgmath::reflect_index(y + t, h), x, 0);
            out.at(y, x, 0) = acc;
        }
    return out;
}

inline MscnField mscn_field(const ImageTensor& img) {
    const ImageTensor mu = mscn_filter(img);
    ImageTensor sq = img;
    for (double& v : sq.data) v *= v;
    const ImageTensor musq = mscn_filter(sq);
    MscnField f{ImageTensor(img.height, img.width, 1, Domain::Latent),
                ImageTensor(img.height, img.width, 1, Domain::Latent)};
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double var = std::max(musq.data[i] - mu.data[i] * mu.data[i], 0.0);
        const double sd = std::sqrt(var);
        f.sigma.data[i] = sd;
        f.mscn.data[i] = (img.data[i] - mu.data[i]) / (sd + 1.0);
    }
    return f;
}

// 18 features of one patch: GGD of MSCN plus AGGD of the four shifted
// products (horizontal, vertical, both diagonals).
inline void patch_features(const ImageTensor& mscn, int y0, int x0, int size,
                           std::vector<double>& out) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(size) * size);
    for (int y = y0; y < y0 + size; ++y)
        for (int x = x0; x < x0 + size; ++x) vals.push_back(mscn.at(y, x, 0));
    double alpha, sigma_sq;
    fit_ggd(vals, alpha, sigma_sq);
    out.push_back(alpha);
    out.push_back(sigma_sq);
    const int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    for (const auto& sh : shifts) {
        vals.clear();
        for (int y = y0; y < y0 + size; ++y)
            for (int x = x0; x < x0 + size; ++x) {
                const int yy = y + sh[0], xx = x + sh[1];
                if (yy < y0 || yy >= y0 + size || xx < x0 || xx >= x0 + size) continue;
                vals.push_back(mscn.at(y, x, 0) * mscn.at(yy, xx, 0));
            }
        double a, eta, slsq, srsq;
        fit_aggd(vals, a, eta, slsq, srsq);
        out.push_back(a);
        out.push_back(eta);
        out.push_back(slsq);
        out.push_back(srsq);
    }
}

}  // namespace detail

// Per-patch NSS features at each of `scales` dyadic scales; rows are the
// patches selected by the sharpness criterion at full resolution.
inline FeatureMatrix niqe_features(const ImageTensor& gray, int patch_size,
                                   double sharpness_threshold, int scales) {
    if (gray.channels != 1) throw DomainError("niqe: expected single-channel image");
    if (patch_size < 4 || patch_size % 2 != 0)
        throw DomainError("niqe: patch size must be even and >= 4");
    if (scales < 1) throw DomainError("niqe: scales must be >= 1");
    if (gray.height < 2 * patch_size || gray.width < 2 * patch_size)
        throw SizeError("niqe: image must span at least two patches per dimension");

    const int rows = gray.height / patch_size;
    const int cols = gray.width / patch_size;
    const int npatch = rows * cols;

    // sharpness selection from the full-resolution local-deviation field
    const auto field0 = detail::mscn_field(gray);
    std::vector<double> sharp(npatch);
    double max_sharp = 0.0;
    for (int py = 0; py < rows; ++py)
        for (int px = 0; px < cols; ++px) {
            double s = 0.0;
            for (int y = py * patch_size; y < (py + 1) * patch_size; ++y)
                for (int x = px * patch_size; x < (px + 1) * patch_size; ++x)
                    s += field0.sigma.at(y, x, 0);
            s /= static_cast<double>(patch_size) * patch_size;
            sharp[py * cols + px] = s;
            max_sharp = std::max(max_sharp, s);
        }
    std::vector<int> selected;
    for (int i = 0; i < npatch; ++i)
        if (max_sharp == 0.0 || sharp[i] > sharpness_threshold * max_sharp)
            selected.push_back(i);

    std::vector<std::vector<double>> feats(selected.size());
    ImageTensor level = gray;
    for (int s = 0; s < scales; ++s) {
        if (s > 0) level = imgmath::resize_bicubic(level, 0.5);
        const int ps = std::max(2, patch_size >> s);
        const auto field = s == 0 ? field0 : detail::mscn_field(level);
        for (std::size_t i = 0; i < selected.size(); ++i) {
            const int py = selected[i] / cols, px = selected[i] % cols;
            detail::patch_features(field.mscn, py * ps, px * ps, ps, feats[i]);
        }
    }

    FeatureMatrix fm;
    fm.n = static_cast<int>(feats.size());
    fm.d = fm.n > 0 ? static_cast<int>(feats[0].size()) : 0;
    fm.data.reserve(static_cast<std::size_t>(fm.n) * fm.d);
    for (const auto& row : feats) fm.data.insert(fm.data.end(), row.begin(), row.end());
    return fm;
}

inline NiqeModel fit_niqe_model(const std::vector<ImageTensor>& images,
                                int patch_size = 96,
                                double sharpness_threshold = 0.75, int scales = 2) {
    if (images.empty()) throw EmptyInput("niqe fit: no images");
    FeatureMatrix all;
    for (const auto& img : images) {
        const ImageTensor gray = imgmath::luminance(img);
        const auto fm = niqe_features(gray, patch_size, sharpness_threshold, scales);
        if (all.d == 0) all.d = fm.d;
        if (fm.d != all.d) throw ShapeError("niqe fit: inconsistent feature dims");
        all.n += fm.n;
        all.data.insert(all.data.end(), fm.data.begin(), fm.data.end());
    }
    const auto fit = detail::fit_gaussian(all);
    NiqeModel m;
    m.mu = fit.mu;
    m.cov = fit.cov;
    m.patch_size = patch_size;
    m.sharpness_threshold = sharpness_threshold;
    m.scales = scales;
    return m;
}

inline double niqe(const ImageTensor& img, const NiqeModel& model,
                   bool* used_pinv = nullptr) {
    const ImageTensor gray = imgmath::luminance(img);
    const auto fm = niqe_features(gray, model.patch_size, model.sharpness_threshold,
                                  model.scales);
    if (fm.d != static_cast<int>(model.mu.size()))
        throw ShapeError("niqe: model dimension does not match extractor output");
    const auto fit = detail::fit_gaussian(fm);
    return mvg_distance(model.mu, model.cov, fit.mu, fit.cov, used_pinv);
}

// ---------------------------------------------------------------------------
// QNR / D_lambda / D_s
// ---------------------------------------------------------------------------

struct QnrResult {
    double d_lambda = 0.0;
    double d_s = 0.0;
    double qnr = 0.0;
};

namespace detail {

inline ImageTensor channel(const ImageTensor& img, int c) {
    ImageTensor out(img.height, img.width, 1, img.domain);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(y, x, 0) = img.at(y, x, c);
    return out;
}

// Wang-Bovik universal quality index over sliding windows, with a total
// definition for constant windows: equal constants score 1, a constant
// against anything else scores 0.
inline double q_index(const ImageTensor& a, const ImageTensor& b, int window) {
    const int h = a.height, w = a.width;
    if (h < window || w < window) throw SizeError("q_index: image smaller than window");
    const double n = static_cast<double>(window) * window;
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + window <= h; ++y0)
        for (int x0 = 0; x0 + window <= w; ++x0) {
            double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int y = y0; y < y0 + window; ++y)
                for (int x = x0; x < x0 + window; ++x) {
                    const double va = a.at(y, x, 0), vb = b.at(y, x, 0);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double ma = sa / n, mb = sb / n;
            const double va = saa / n - ma * ma;
            const double vb = sbb / n - mb * mb;
            const double cab = sab / n - ma * mb;
            double q;
            if (va <= 0.0 && vb <= 0.0) {
                q = ma == mb ? 1.0 : 0.0;
            } else if (va <= 0.0 || vb <= 0.0) {
                q = 0.0;
            } else {
                const double denom = (va + vb) * (ma * ma + mb * mb);
                q = denom > 0.0 ? 4.0 * cab * ma * mb / denom : 2.0 * cab / (va + vb);
            }
            acc += q;
            ++count;
        }
    return acc / count;
}

}  // namespace detail

inline QnrResult qnr(const ImageTensor& fused, const ImageTensor& original_ms,
                     const ImageTensor& pan, double alpha = 1.0, double beta = 1.0,
                     int window = 8) {
    require_same_shape(fused, original_ms, "qnr");
    if (fused.channels < 2) throw DomainError("qnr: needs at least 2 bands");
    if (pan.channels != 1 || pan.height != fused.height || pan.width != fused.width)
        throw ShapeError("qnr: pan must be single-channel at the fused resolution");
    const int bands = fused.channels;

    std::vector<ImageTensor> fused_b, orig_b;
    for (int b = 0; b < bands; ++b) {
        fused_b.push_back(detail::channel(fused, b));
        orig_b.push_back(detail::channel(original_ms, b));
    }

    double dl = 0.0;
    for (int i = 0; i < bands; ++i)
        for (int j = i + 1; j < bands; ++j) {
            const double q_orig = detail::q_index(orig_b[i], orig_b[j], window);
            const double q_fused = detail::q_index(fused_b[i], fused_b[j], window);
            dl += std::clamp(std::abs(q_orig - q_fused), 0.0, 1.0);
        }
    dl *= 2.0 / (static_cast<double>(bands) * (bands - 1));

    const ImageTensor grad_pan = imgmath::gradient_magnitude(pan);
    double ds = 0.0;
    for (int b = 0; b < bands; ++b) {
        const double q_orig =
            detail::q_index(imgmath::gradient_magnitude(orig_b[b]), grad_pan, window);
        const double q_fused =
            detail::q_index(imgmath::gradient_magnitude(fused_b[b]), grad_pan, window);
        ds += std::clamp(std::abs(q_orig - q_fused), 0.0, 1.0);
    }
    ds /= bands;

    QnrResult res;
    res.d_lambda = dl;
    res.d_s = ds;
    res.qnr = std::pow(1.0 - dl, alpha) * std::pow(1.0 - ds, beta);
    return res;
}

// ---------------------------------------------------------------------------
// Gaussian NLL (mean per element)
// ---------------------------------------------------------------------------

inline double gaussian_nll(std::span<const double> y, std::span<const double> mu,
                           std::span<const double> sigma) {
    if (y.size() != mu.size() || y.size() != sigma.size())
        throw ShapeError("gaussian_nll: length mismatch");
    if (y.empty()) throw EmptyInput("gaussian_nll: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(sigma[i] > 0.0)) throw DomainError("gaussian_nll: sigma must be positive");
        const double z = (y[i] - mu[i]) / sigma[i];
        acc += 0.5 * (std::log(2.0 * std::numbers::pi * sigma[i] * sigma[i]) + z * z);
    }
    return acc / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// ECE for regression via quantile coverage
// ---------------------------------------------------------------------------

struct QuantileForecast {
    std::vector<double> levels;     // M increasing levels in (0,1)
    std::vector<double> quantiles;  // n x M, row-major; +inf rows allowed
    std::vector<double> weights;    // M non-negative weights summing to 1

    int level_count() const { return static_cast<int>(levels.size()); }
    int sample_count() const {
        return levels.empty() ? 0 : static_cast<int>(quantiles.size() / levels.size());
    }

    void validate() const {
        const int m = level_count();
        if (m == 0) throw EmptyInput("quantile forecast: no levels");
        for (int i = 0; i < m; ++i) {
            if (!(levels[i] > 0.0 && levels[i] < 1.0))
                throw DomainError("quantile forecast: levels must lie in (0,1)");
            if (i > 0 && !(levels[i] > levels[i - 1]))
                throw DomainError("quantile forecast: levels must be increasing");
        }
        if (weights.size() != static_cast<std::size_t>(m))
            throw ShapeError("quantile forecast: one weight per level required");
        double wsum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw DomainError("quantile forecast: negative weight");
            wsum += w;
        }
        if (std::abs(wsum - 1.0) > 1e-9)
            throw DomainError("quantile forecast: weights must sum to 1");
        if (quantiles.size() % m != 0)
            throw ShapeError("quantile forecast: quantile matrix not n x M");
        const int n = sample_count();
        for (int i = 0; i < n; ++i)
            for (int j = 1; j < m; ++j)
                if (quantiles[static_cast<std::size_t>(i) * m + j] <
                    quantiles[static_cast<std::size_t>(i) * m + j - 1])
                    throw DomainError(
                        "quantile forecast: per-sample quantiles must be non-decreasing");
    }
};

inline double ece_regression(const QuantileForecast& forecast,
                             std::span<const double> y) {
    forecast.validate();
    const int n = forecast.sample_count();
    const int m = forecast.level_count();
    if (n == 0 || y.empty()) throw EmptyInput("ece_regression: no samples");
    if (y.size() != static_cast<std::size_t>(n))
        throw ShapeError("ece_regression: y length must match forecast rows");
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
        std::size_t covered = 0;
        for (int i = 0; i < n; ++i)
            if (y[i] <= forecast.quantiles[static_cast<std::size_t>(i) * m + j]) ++covered;
        const double cov = static_cast<double>(covered) / n;
        acc += forecast.weights[j] * std::abs(cov - forecast.levels[j]);
    }
    return acc;
}

}  // namespace srtk::metrics_blind
