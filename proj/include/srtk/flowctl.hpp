#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/imgmath.hpp"

namespace srtk::flowctl {

// ---------------------------------------------------------------------------
// Noise schedule: sigma_t = s*(t/T) / (1 + (s-1)*(t/T)), t = 1..T.
// shift = 1 is the plain linear schedule.
// ---------------------------------------------------------------------------

struct NoiseSchedule {
    int steps = 0;
    double shift = 1.0;
    std::vector<double> sigmas;  // strictly increasing, sigma_T == 1
};

inline NoiseSchedule make_schedule(int steps, double shift) {
    if (steps < 1) throw DomainError("make_schedule: steps must be >= 1");
    if (!(shift > 0.0)) throw DomainError("make_schedule: shift must be positive");
    NoiseSchedule sch;
    sch.steps = steps;
    sch.shift = shift;
    sch.sigmas.resize(steps);
    for (int t = 1; t <= steps; ++t) {
        const double tau = static_cast<double>(t) / steps;
        sch.sigmas[t - 1] = shift * tau / (1.0 + (shift - 1.0) * tau);
    }
    return sch;
}

// z_t = (1 - sigma_t) z0 + sigma_t eps, elementwise.
inline ImageTensor add_noise(const ImageTensor& z0, const ImageTensor& eps,
                             double sigma_t) {
    require_same_shape(z0, eps, "add_noise");
    if (!(sigma_t >= 0.0 && sigma_t <= 1.0))
        throw DomainError("add_noise: sigma_t outside [0,1]");
    ImageTensor out = z0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (1.0 - sigma_t) * z0.data[i] + sigma_t * eps.data[i];
    return out;
}

// ---------------------------------------------------------------------------
// Per-block gates
// ---------------------------------------------------------------------------

struct GateParams {
    struct Block {
        double p0 = 0.0;
        double pt = 0.0;
        double pu = 0.0;
    };
    std::map<std::string, Block> blocks;  // ordered for deterministic reports
    double s_ctrl = 1.0;

    void validate() const {
        if (!(s_ctrl > 0.0)) throw DomainError("gate params: s_ctrl must be positive");
    }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// alpha = logistic(p0 + pt * t_norm + pu * u), strictly inside (0,1).
inline double gate_alpha(const GateParams& params, const std::string& block,
                         double t_norm, double u) {
    if (!(t_norm >= 0.0 && t_norm <= 1.0))
        throw DomainError("gate_alpha: t_norm outside [0,1]");
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("gate_alpha: u outside [0,1]");
    const auto it = params.blocks.find(block);
    if (it == params.blocks.end())
        throw KeyError("gate_alpha: unknown block '" + block + "'");
    const auto& g = it->second;
    return logistic(g.p0 + g.pt * t_norm + g.pu * u);
}

inline ImageTensor blend_residual(const ImageTensor& r, double alpha, double s_ctrl) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("blend_residual: alpha must lie in (0,1)");
    if (!(s_ctrl > 0.0)) throw DomainError("blend_residual: s_ctrl must be positive");
    ImageTensor out = r;
    const double s = s_ctrl * alpha;
    for (double& v : out.data) v *= s;
    return out;
}

// ---------------------------------------------------------------------------
// MC-dropout uncertainty
// ---------------------------------------------------------------------------

enum class UncertaintyMode { PercentileTau, FixedKappa };

inline const char* uncertainty_mode_name(UncertaintyMode m) {
    return m == UncertaintyMode::PercentileTau ? "percentile-tau" : "fixed-kappa";
}

struct UncertaintyResult {
    ImageTensor variance;  // per-pixel, per-channel
    double scale = 0.0;    // tau or kappa
    double u = 0.0;        // in [0,1]
    UncertaintyMode mode = UncertaintyMode::PercentileTau;
};

// Unbiased per-element sample variance over a stack (Welford).
inline ImageTensor variance_map(const std::vector<ImageTensor>& samples) {
    if (samples.size() < 2)
        throw InsufficientSamples("variance_map: need at least 2 samples");
    for (std::size_t k = 1; k < samples.size(); ++k)
        require_same_shape(samples[0], samples[k], "variance_map");
    const auto& first = samples[0];
    ImageTensor mean(first.height, first.width, first.channels, Domain::Latent);
    ImageTensor m2(first.height, first.width, first.channels, Domain::Latent);
    double count = 0.0;
    for (const auto& s : samples) {
        count += 1.0;
        for (std::size_t i = 0; i < s.data.size(); ++i) {
            const double delta = s.data[i] - mean.data[i];
            mean.data[i] += delta / count;
            m2.data[i] += delta * (s.data[i] - mean.data[i]);
        }
    }
    for (std::size_t i = 0; i < m2.data.size(); ++i) m2.data[i] /= (count - 1.0);
    return m2;
}

// tau = Pct95 of per-image mean variances, plus a tiny epsilon guard.
inline constexpr double kTauEpsilon = 1e-12;

inline double tau_from_batch(std::span<const double> mean_variances) {
    if (mean_variances.empty()) throw EmptyInput("tau_from_batch: empty batch");
    return imgmath::percentile(mean_variances, 95.0) + kTauEpsilon;
}

// u = clip(mean(clip(v, 0, tau)) / tau, 0, 1); each clipped element is
// divided by tau before averaging so v = tau everywhere gives exactly 1.
inline UncertaintyResult u_from_tau(const ImageTensor& v, double tau) {
    if (!(tau > 0.0)) throw DomainError("u_from_tau: tau must be positive");
    double acc = 0.0;
    for (double x : v.data) acc += std::clamp(x, 0.0, tau) / tau;
    const double u = std::clamp(acc / static_cast<double>(v.size()), 0.0, 1.0);
    return {v, tau, u, UncertaintyMode::PercentileTau};
}

// u = 1 - exp(-mean(v) / kappa)
inline UncertaintyResult u_fixed_kappa(const ImageTensor& v, double kappa) {
    if (!(kappa > 0.0)) throw DomainError("u_fixed_kappa: kappa must be positive");
    const double u = 1.0 - std::exp(-imgmath::mean(v) / kappa);
    return {v, kappa, u, UncertaintyMode::FixedKappa};
}

}  // namespace srtk::flowctl
