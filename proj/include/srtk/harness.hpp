#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/flowctl.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/loss.hpp"
#include "srtk/metrics_ref.hpp"
#include "srtk/report.hpp"
#include "srtk/rng.hpp"
#include "srtk/version.hpp"

namespace srtk::harness {

// RNG stream ids; draws are keyed (seed, stream, ...) so samples can be
// produced in any order.
inline constexpr std::uint64_t kStreamTexture = 1;
inline constexpr std::uint64_t kStreamScar = 2;
inline constexpr std::uint64_t kStreamChannel = 3;
inline constexpr std::uint64_t kStreamDropout = 4;

// fixed generator constants, echoed in reports
inline constexpr double kTextureBlurSigma = 2.0;
inline constexpr double kScarAlbedo = 0.5;
inline constexpr double kHighpassSigma = 2.0;

struct HarnessConfig {
    std::uint64_t seed = 42;
    int size = 64;
    int scale_factor = 4;
    int t_mc = 8;
    double p_do = 0.1;
    flowctl::UncertaintyMode mode = flowctl::UncertaintyMode::FixedKappa;
    double kappa = 1e-3;
    double sigma_t = 0.5;
    flowctl::GateParams gates;
    loss::LossWeights weights;

    void validate() const {
        if (t_mc < 2) throw InsufficientSamples("harness: t_mc must be >= 2");
        if (!(p_do >= 0.0 && p_do < 1.0))
            throw DomainError("harness: dropout rate must lie in [0,1)");
        if (scale_factor < 1) throw DomainError("harness: scale_factor must be >= 1");
        if (size < 4 * scale_factor)
            throw DomainError("harness: size must be >= 4 * scale_factor");
        if (!(kappa > 0.0)) throw DomainError("harness: kappa must be positive");
        gates.validate();
        weights.validate();
    }
};

// Four gates with staggered time coefficients; uncertainty closes them.
inline flowctl::GateParams default_gate_params() {
    flowctl::GateParams g;
    g.s_ctrl = 1.0;
    g.blocks["block0"] = {0.0, -1.5, -2.0};
    g.blocks["block1"] = {0.0, -0.5, -2.0};
    g.blocks["block2"] = {0.0, 0.5, -2.0};
    g.blocks["block3"] = {0.0, 1.5, -2.0};
    return g;
}

namespace detail {

struct Polygon {
    double cx, cy;
    std::vector<double> xs, ys;

    bool contains(double px, double py) const {
        bool inside = false;
        const std::size_t n = xs.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            if ((ys[i] > py) != (ys[j] > py) &&
                px < (xs[j] - xs[i]) * (py - ys[i]) / (ys[j] - ys[i]) + xs[i])
                inside = !inside;
        }
        return inside;
    }
};

inline Polygon make_scar_polygon(const rng::CounterRng& r, int size) {
    Polygon p;
    p.cx = (0.25 + 0.5 * r.uniform(0)) * size;
    p.cy = (0.25 + 0.5 * r.uniform(1)) * size;
    const double r0 = (0.12 + 0.10 * r.uniform(2)) * size;
    const int nv = 5 + static_cast<int>(r.uniform(3) * 4.0);
    for (int i = 0; i < nv; ++i) {
        const double ang =
            2.0 * std::numbers::pi * (i + 0.3 * r.uniform(10 + 2 * i)) / nv;
        const double rad = r0 * (0.7 + 0.5 * r.uniform(11 + 2 * i));
        p.xs.push_back(p.cx + rad * std::cos(ang));
        p.ys.push_back(p.cy + rad * std::sin(ang));
    }
    return p;
}

}  // namespace detail

// HR: blurred noise texture remapped to [0.35, 0.85], a darker polygonal
// region, then per-channel gain/bias. LR: blur + bicubic downsample.
inline std::pair<ImageTensor, ImageTensor> gen_pair(std::uint64_t seed, int size,
                                                    int scale_factor) {
    if (scale_factor < 1) throw DomainError("gen_pair: scale_factor must be >= 1");
    if (size < 4 * scale_factor)
        throw DomainError("gen_pair: size must be >= 4 * scale_factor");

    const rng::CounterRng tex_rng(seed, kStreamTexture);
    ImageTensor base(size, size, 1, Domain::Latent);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            base.at(y, x, 0) = tex_rng.gaussian(static_cast<std::uint64_t>(y) * size + x);
    base = imgmath::gaussian_blur(base, imgmath::GaussianKernel::make(kTextureBlurSigma));

    const auto [lo_it, hi_it] = std::minmax_element(base.data.begin(), base.data.end());
    const double lo = *lo_it, hi = *hi_it;
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : base.data) v = 0.35 + 0.5 * (v - lo) / span;

    const auto scar =
        detail::make_scar_polygon(rng::CounterRng(seed, kStreamScar), size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (scar.contains(x + 0.5, y + 0.5)) base.at(y, x, 0) *= kScarAlbedo;

    const rng::CounterRng chan_rng(seed, kStreamChannel);
    ImageTensor hr(size, size, 3, Domain::Unit);
    for (int c = 0; c < 3; ++c) {
        const double gain = 0.9 + 0.15 * chan_rng.uniform(2 * c);
        const double bias = -0.03 + 0.08 * chan_rng.uniform(2 * c + 1);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                hr.at(y, x, c) = std::clamp(gain * base.at(y, x, 0) + bias, 0.0, 1.0);
    }

    ImageTensor lr = imgmath::gaussian_blur(
        hr, imgmath::GaussianKernel::make(scale_factor / 2.0));
    lr = imgmath::resize_bicubic(lr, 1.0 / scale_factor);
    lr.domain = Domain::Unit;
    for (double& v : lr.data) v = std::clamp(v, 0.0, 1.0);
    return {std::move(hr), std::move(lr)};
}

// Toy stochastic reconstructor: bicubic upsample plus an inverted-dropout
// masked highpass detail layer. p_do = 0 makes every sample identical.
inline std::vector<ImageTensor> reconstruct_mc(const ImageTensor& lr, int t_mc,
                                               double p_do, std::uint64_t seed,
                                               int scale_factor) {
    if (t_mc < 2) throw InsufficientSamples("reconstruct_mc: need t_mc >= 2");
    if (!(p_do >= 0.0 && p_do < 1.0))
        throw DomainError("reconstruct_mc: dropout rate must lie in [0,1)");
    ImageTensor up = imgmath::resize_bicubic(lr, scale_factor);
    const ImageTensor blurred =
        imgmath::gaussian_blur(up, imgmath::GaussianKernel::make(kHighpassSigma));
    ImageTensor highpass = up;
    for (std::size_t i = 0; i < highpass.data.size(); ++i)
        highpass.data[i] -= blurred.data[i];

    const double keep = 1.0 - p_do;
    std::vector<ImageTensor> samples;
    samples.reserve(t_mc);
    for (int k = 0; k < t_mc; ++k) {
        const rng::CounterRng mask_rng(seed, kStreamDropout, static_cast<std::uint64_t>(k));
        ImageTensor s = up;
        s.domain = Domain::Latent;
        for (std::size_t i = 0; i < s.data.size(); ++i) {
            const double m = mask_rng.uniform(i) >= p_do ? 1.0 / keep : 0.0;
            s.data[i] += m * highpass.data[i];
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

struct RunReport {
    // config echo
    HarnessConfig config;
    // uncertainty chain
    double mean_variance = 0.0;
    double scale = 0.0;  // tau or kappa
    double u = 0.0;
    // gates over a t_norm grid
    std::vector<double> t_grid;
    std::map<std::string, std::vector<double>> alpha;         // per block
    std::map<std::string, std::vector<double>> blended_norm;  // per block
    double residual_norm = 0.0;
    // losses of the clamped mean reconstruction vs HR
    double loss_base = 0.0, loss_fft = 0.0, loss_color = 0.0, loss_total = 0.0;
    // full-reference metrics of the mean reconstruction vs HR
    std::map<std::string, double> metrics;
};

inline double l2_norm(const ImageTensor& img) {
    double s = 0.0;
    for (double v : img.data) s += v * v;
    return std::sqrt(s);
}

// Full chain: MC reconstructions -> variance -> u -> gates -> losses and
// full-reference metrics against the generated HR.
inline RunReport run_pipeline(const HarnessConfig& config_in) {
    HarnessConfig config = config_in;
    if (config.gates.blocks.empty()) config.gates = default_gate_params();
    config.validate();

    RunReport rep;
    rep.config = config;

    auto [hr, lr] = gen_pair(config.seed, config.size, config.scale_factor);
    const auto samples =
        reconstruct_mc(lr, config.t_mc, config.p_do, config.seed, config.scale_factor);
    const ImageTensor vmap = flowctl::variance_map(samples);
    rep.mean_variance = imgmath::mean(vmap);

    flowctl::UncertaintyResult unc =
        config.mode == flowctl::UncertaintyMode::FixedKappa
            ? flowctl::u_fixed_kappa(vmap, config.kappa)
            : flowctl::u_from_tau(
                  vmap, flowctl::tau_from_batch(std::vector<double>{rep.mean_variance}));
    rep.scale = unc.scale;
    rep.u = unc.u;

    // stand-in control residual: the highpass detail layer
    ImageTensor up = imgmath::resize_bicubic(lr, config.scale_factor);
    const ImageTensor blurred =
        imgmath::gaussian_blur(up, imgmath::GaussianKernel::make(kHighpassSigma));
    ImageTensor residual = up;
    for (std::size_t i = 0; i < residual.data.size(); ++i)
        residual.data[i] -= blurred.data[i];
    rep.residual_norm = l2_norm(residual);

    for (int i = 0; i <= 10; ++i) rep.t_grid.push_back(i / 10.0);
    for (const auto& [name, block] : config.gates.blocks) {
        auto& alphas = rep.alpha[name];
        auto& norms = rep.blended_norm[name];
        for (double t : rep.t_grid) {
            const double a = flowctl::gate_alpha(config.gates, name, t, rep.u);
            alphas.push_back(a);
            norms.push_back(config.gates.s_ctrl * a * rep.residual_norm);
        }
    }

    // mean reconstruction, clamped back to the unit domain
    ImageTensor mean_recon(hr.height, hr.width, hr.channels, Domain::Unit);
    for (std::size_t i = 0; i < mean_recon.data.size(); ++i) {
        double s = 0.0;
        for (const auto& smp : samples) s += smp.data[i];
        mean_recon.data[i] = std::clamp(s / config.t_mc, 0.0, 1.0);
    }

    const auto breakdown = loss::total_loss(mean_recon, hr, hr, config.sigma_t,
                                            nullptr, nullptr, config.weights, false);
    rep.loss_base = breakdown.base;
    rep.loss_fft = breakdown.fft;
    rep.loss_color = breakdown.color;
    rep.loss_total = breakdown.total;

    rep.metrics["psnr"] = metrics_ref::psnr(hr, mean_recon, 1.0);
    rep.metrics["ssim"] = metrics_ref::ssim(hr, mean_recon);
    rep.metrics["fsim"] = metrics_ref::fsim(hr, mean_recon);
    rep.metrics["sam_deg"] = metrics_ref::sam_degrees(hr, mean_recon);
    rep.metrics["de2000"] =
        metrics_ref::delta_e2000(imgmath::srgb_to_lab(hr), imgmath::srgb_to_lab(mean_recon));
    return rep;
}

// Deterministic JSON form; identical configs serialize to identical bytes.
inline report::Value run_report_to_value(const RunReport& rep) {
    using report::Value;
    Value doc = Value::object();
    doc["schema_version"] = kReportSchemaVersion;
    doc["toolkit_version"] = kVersion;
    doc["command"] = "harness";

    Value cfg = Value::object();
    cfg["seed"] = static_cast<std::int64_t>(rep.config.seed);
    cfg["size"] = rep.config.size;
    cfg["scale_factor"] = rep.config.scale_factor;
    cfg["t_mc"] = rep.config.t_mc;
    cfg["p_do"] = rep.config.p_do;
    cfg["uncertainty_mode"] = flowctl::uncertainty_mode_name(rep.config.mode);
    cfg["kappa"] = rep.config.kappa;
    cfg["sigma_t"] = rep.config.sigma_t;
    cfg["s_ctrl"] = rep.config.gates.s_ctrl;
    Value blocks = Value::object();
    for (const auto& [name, b] : rep.config.gates.blocks) {
        Value g = Value::object();
        g["p0"] = b.p0;
        g["pt"] = b.pt;
        g["pu"] = b.pu;
        blocks[name] = g;
    }
    cfg["gate_blocks"] = blocks;
    Value w = Value::object();
    w["lambda_fft"] = rep.config.weights.lambda_fft;
    w["lambda_color"] = rep.config.weights.lambda_color;
    w["lambda_lpips"] = rep.config.weights.lambda_lpips;
    w["gamma"] = rep.config.weights.gamma;
    w["blur_sigma"] = rep.config.weights.blur_sigma;
    w["omega_mode"] = loss::omega_mode_name(rep.config.weights.omega_mode);
    cfg["loss_weights"] = w;
    Value gen = Value::object();
    gen["texture_blur_sigma"] = kTextureBlurSigma;
    gen["scar_albedo"] = kScarAlbedo;
    gen["highpass_sigma"] = kHighpassSigma;
    cfg["generator"] = gen;
    doc["config"] = cfg;

    Value notes = Value::object();
    notes["u_granularity"] = "once per image, gates reported over a t_norm grid";
    notes["variance_estimator"] = "unbiased (t_mc - 1 divisor)";
    notes["u_reduction"] = "mean over all pixels and channels jointly";
    doc["notes"] = notes;

    Value unc = Value::object();
    unc["mean_variance"] = rep.mean_variance;
    unc["scale"] = rep.scale;
    unc["u"] = rep.u;
    doc["uncertainty"] = unc;

    Value grid = Value::array();
    for (double t : rep.t_grid) grid.push_back(t);
    doc["t_grid"] = grid;
    Value alpha = Value::object();
    for (const auto& [name, vals] : rep.alpha) {
        Value arr = Value::array();
        for (double v : vals) arr.push_back(v);
        alpha[name] = arr;
    }
    doc["alpha"] = alpha;
    doc["residual_norm"] = rep.residual_norm;
    Value bn = Value::object();
    for (const auto& [name, vals] : rep.blended_norm) {
        Value arr = Value::array();
        for (double v : vals) arr.push_back(v);
        bn[name] = arr;
    }
    doc["blended_residual_norm"] = bn;

    Value losses = Value::object();
    losses["base"] = rep.loss_base;
    losses["fft"] = rep.loss_fft;
    losses["color"] = rep.loss_color;
    losses["total"] = rep.loss_total;
    doc["loss"] = losses;

    Value mets = Value::object();
    for (const auto& [name, v] : rep.metrics) mets[name] = v;
    doc["metrics"] = mets;
    return doc;
}

}  // namespace srtk::harness
